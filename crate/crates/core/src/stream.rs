//! Line-oriented update streams: one `i v` pair per line, decimal, `#` starts
//! a comment.

use std::fmt;
use std::io::BufRead;

#[derive(Debug, Clone, PartialEq)]
pub enum StreamError {
    Io(String),
    Parse { line: usize, message: String },
}

impl fmt::Display for StreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamError::Io(m) => write!(f, "read error: {m}"),
            StreamError::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

impl std::error::Error for StreamError {}

/// Parses one line; `Ok(None)` for blank and comment lines.
pub fn parse_line(text: &str, line: usize) -> Result<Option<(u64, f64)>, StreamError> {
    let body = text.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let err = |message: String| StreamError::Parse { line, message };
    let mut fields = body.split_whitespace();
    let (Some(i), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(err(format!("expected \"<index> <value>\", got {body:?}")));
    };
    let i = i.parse::<u64>().map_err(|e| err(format!("bad index {i:?}: {e}")))?;
    let v = v.parse::<f64>().map_err(|e| err(format!("bad value {v:?}: {e}")))?;
    if !v.is_finite() {
        return Err(err(format!("value {v} is not finite")));
    }
    Ok(Some((i, v)))
}

pub fn read_stream(reader: impl BufRead) -> Result<Vec<(u64, f64)>, StreamError> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| StreamError::Io(e.to_string()))?;
        if let Some(u) = parse_line(&line, k + 1)? {
            out.push(u);
        }
    }
    Ok(out)
}

pub fn write_stream(mut w: impl std::io::Write, updates: &[(u64, f64)]) -> std::io::Result<()> {
    for (i, v) in updates {
        writeln!(w, "{i} {v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let text = "# header\n3 1.5\n\n7 -2 # trailing\n";
        assert_eq!(read_stream(text.as_bytes()).unwrap(), vec![(3, 1.5), (7, -2.0)]);
    }

    #[test]
    fn reports_line_numbers() {
        let err = read_stream("1 2\n1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, StreamError::Parse { line: 2, .. }));
        assert!(matches!(read_stream("1\n".as_bytes()), Err(StreamError::Parse { line: 1, .. })));
        assert!(matches!(read_stream("-1 2\n".as_bytes()), Err(StreamError::Parse { line: 1, .. })));
        assert!(matches!(read_stream("1 2 3\n".as_bytes()), Err(StreamError::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trip() {
        let ups = vec![(0, 0.1), (5, -3.0), (9, 1e-300)];
        let mut buf = Vec::new();
        write_stream(&mut buf, &ups).unwrap();
        assert_eq!(read_stream(buf.as_slice()).unwrap(), ups);
    }
}
