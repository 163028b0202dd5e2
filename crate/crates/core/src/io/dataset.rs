//! CSV dataset ingestion: `text,label` rows, RFC-4180 quoting.

use std::path::Path;

use crate::error::{Error, Result};
use crate::text::LabeledExample;

/// Class-count shapes of the corpora this toolkit was written around, used
/// only to warn when a file is probably not one of them. Order-insensitive.
const KNOWN_CORPUS_SHAPES: [&[usize]; 3] = [
    // 15,844 messages: racism / sexism / none
    &[1_924, 3_058, 10_862],
    // 25,112 messages: hate / offensive / neither
    &[1_498, 19_326, 4_288],
    // 20,362 messages: positive / negative
    &[5_235, 15_127],
];

/// A parsed dataset: examples in file order, the sorted distinct label set,
/// and per-label counts aligned with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub labels: Vec<String>,
    pub histogram: Vec<usize>,
    pub warnings: Vec<String>,
}

/// True when `counts` matches one of the known corpus shapes, in any order.
pub fn matches_known_corpus(counts: &[usize]) -> bool {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    KNOWN_CORPUS_SHAPES.iter().any(|shape| {
        let mut s = shape.to_vec();
        s.sort_unstable();
        s == sorted
    })
}

fn line_of(position: Option<&csv::Position>) -> usize {
    position.map_or(0, |p| p.line() as usize)
}

/// Read a `text,label` CSV. Every row must have exactly two fields and a
/// non-blank text; labels are collected into a sorted set with counts. The
/// returned warnings flag class totals that match none of the known corpora,
/// which usually just means the file is a custom dataset.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format { line: 1, msg: format!("{other:?}") },
        })?;

    let headers = reader.headers().map_err(|e| Error::Format {
        line: 1,
        msg: format!("unreadable header: {e}"),
    })?;
    let fields: Vec<&str> = headers.iter().collect();
    if fields != ["text", "label"] {
        return Err(Error::Format {
            line: 1,
            msg: format!("header must be \"text,label\", found {fields:?}"),
        });
    }

    let mut examples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Format { line, msg: format!("{e}") }
        })?;
        let line = line_of(record.position());
        if record.len() != 2 {
            return Err(Error::Format {
                line,
                msg: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let text = record.get(0).unwrap_or("");
        let label = record.get(1).unwrap_or("");
        if text.trim().is_empty() {
            return Err(Error::Format { line, msg: "empty text field".into() });
        }
        if label.trim().is_empty() {
            return Err(Error::Format { line, msg: "empty label field".into() });
        }
        examples.push(LabeledExample {
            text: text.to_string(),
            label: label.to_string(),
        });
    }
    if examples.is_empty() {
        return Err(Error::Argument(format!(
            "dataset {} contains no examples",
            path.display()
        )));
    }

    let mut labels: Vec<String> = examples.iter().map(|e| e.label.clone()).collect();
    labels.sort();
    labels.dedup();
    let histogram: Vec<usize> = labels
        .iter()
        .map(|l| examples.iter().filter(|e| &e.label == l).count())
        .collect();

    let mut warnings = Vec::new();
    if !matches_known_corpus(&histogram) {
        warnings.push(format!(
            "class totals {histogram:?} match none of the known corpus shapes"
        ));
    }
    Ok(Dataset { examples, labels, histogram, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn two_rows_two_classes() {
        let f = write_csv("text,label\nsome message,racism\nanother one,none\n");
        let ds = load_dataset(f.path()).unwrap();
        assert_eq!(ds.examples.len(), 2);
        assert_eq!(ds.examples[0].text, "some message");
        assert_eq!(ds.examples[0].label, "racism");
        assert_eq!(ds.labels, vec!["none".to_string(), "racism".to_string()]);
        assert_eq!(ds.histogram, vec![1, 1]);
        assert_eq!(ds.warnings.len(), 1);
    }

    #[test]
    fn quoted_comma_stays_one_field() {
        let f = write_csv("text,label\n\"hello, world\",none\n");
        let ds = load_dataset(f.path()).unwrap();
        assert_eq!(ds.examples[0].text, "hello, world");
    }

    #[test]
    fn quoted_newline_and_escaped_quote_parse() {
        let f = write_csv("text,label\n\"line one\nline two\",none\n\"she said \"\"hi\"\"\",none\n");
        let ds = load_dataset(f.path()).unwrap();
        assert_eq!(ds.examples[0].text, "line one\nline two");
        assert_eq!(ds.examples[1].text, "she said \"hi\"");
    }

    #[test]
    fn examples_keep_file_order() {
        let f = write_csv("text,label\nfirst,b\nsecond,a\nthird,b\n");
        let ds = load_dataset(f.path()).unwrap();
        let texts: Vec<&str> = ds.examples.iter().map(|e| e.text.as_str()).collect();
        assert_eq!(texts, vec!["first", "second", "third"]);
        assert_eq!(ds.labels, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(ds.histogram, vec![1, 2]);
    }

    #[test]
    fn malformed_row_reports_its_line() {
        let f = write_csv("text,label\ngood row,none\nbad,row,extra\n");
        let err = load_dataset(f.path()).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn blank_text_reports_its_line() {
        let f = write_csv("text,label\nfine,none\n\"   \",none\n");
        let err = load_dataset(f.path()).unwrap_err();
        match err {
            Error::Format { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("empty text"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn empty_and_header_only_files_rejected() {
        let empty = write_csv("");
        assert!(load_dataset(empty.path()).is_err());
        let header_only = write_csv("text,label\n");
        assert!(matches!(load_dataset(header_only.path()), Err(Error::Argument(_))));
    }

    #[test]
    fn wrong_header_rejected() {
        let f = write_csv("message,class\nhello,none\n");
        let err = load_dataset(f.path()).unwrap_err();
        match err {
            Error::Format { line, msg } => {
                assert_eq!(line, 1);
                assert!(msg.contains("text,label"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_dataset(Path::new("/nonexistent/data.csv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn known_corpus_shapes_are_recognized() {
        assert!(matches_known_corpus(&[1_924, 3_058, 10_862]));
        assert!(matches_known_corpus(&[10_862, 1_924, 3_058]));
        assert!(matches_known_corpus(&[1_498, 19_326, 4_288]));
        assert!(matches_known_corpus(&[15_127, 5_235]));
        assert!(!matches_known_corpus(&[1_924, 3_058, 10_863]));
        assert!(!matches_known_corpus(&[2, 3]));
    }
}
