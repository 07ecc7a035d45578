//! Daily price series ingestion and windowing.
//!
//! Adjacency is by index position: weekends and holidays simply do not
//! appear, so a [`Window`] always covers consecutive trading days.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use crate::error::{Error, Result};

pub const DATE_COLUMN: &str = "Date";
pub const DEFAULT_VALUE_COLUMN: &str = "Adj Close";
const DATE_FORMAT: &str = "%Y-%m-%d";

/// Ordered observations of one instrument. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    symbol: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

/// A contiguous run of `len` observations starting at index `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

impl Window {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    /// One past the last index covered.
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

impl Series {
    pub fn new(symbol: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: values.len(),
            });
        }
        if values.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 observations, got {}",
                values.len()
            )));
        }
        for pair in dates.windows(2) {
            if pair[1] == pair[0] {
                return Err(Error::DuplicateDate(pair[1]));
            }
            if pair[1] < pair[0] {
                return Err(Error::InvalidSeries(format!(
                    "dates not increasing at {}",
                    pair[1]
                )));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self {
            symbol: symbol.into(),
            dates,
            values,
        })
    }

    /// Build a series on consecutive business days starting 2000-01-03.
    /// Convenient for synthetic data where calendar dates carry no meaning.
    pub fn from_values(symbol: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
        let dates = business_days(start, values.len());
        Self::new(symbol, dates, values)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slice(&self, w: Window) -> Result<&[f64]> {
        if w.end() > self.len() {
            return Err(Error::WindowOutOfRange {
                start: w.start,
                len: w.len,
                series_len: self.len(),
            });
        }
        Ok(&self.values[w.start..w.end()])
    }

    /// The window covering the last `len` observations.
    pub fn trailing(&self, len: usize) -> Result<Window> {
        if len > self.len() {
            return Err(Error::WindowOutOfRange {
                start: 0,
                len,
                series_len: self.len(),
            });
        }
        Ok(Window::new(self.len() - len, len))
    }

    /// A new series holding only the first `len` observations.
    pub fn prefix(&self, len: usize) -> Result<Series> {
        if len > self.len() {
            return Err(Error::WindowOutOfRange {
                start: 0,
                len,
                series_len: self.len(),
            });
        }
        Series::new(
            self.symbol.clone(),
            self.dates[..len].to_vec(),
            self.values[..len].to_vec(),
        )
    }

    /// Write as a two-column `Date,<column>` CSV that [`read_csv`] accepts.
    pub fn write_csv<W: Write>(&self, writer: W, column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([DATE_COLUMN, column])?;
        for (d, v) in self.dates.iter().zip(&self.values) {
            w.write_record([d.format(DATE_FORMAT).to_string(), v.to_string()])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// `n` consecutive Monday-to-Friday dates starting at `start` (or the next
/// weekday if `start` falls on a weekend).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

pub fn load_csv(path: impl AsRef<Path>, column: &str) -> Result<Series> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, &symbol, column)
}

/// Parse a Yahoo-style CSV. Rows may appear in any date order; the result is
/// sorted ascending. Row numbers in errors are 1-based file lines.
pub fn read_csv<R: Read>(reader: R, symbol: &str, column: &str) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Empty("no header row".into()));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_idx = find(DATE_COLUMN)?;
    let value_idx = find(column)?;

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        let date =
            NaiveDate::parse_from_str(field(date_idx), DATE_FORMAT).map_err(|_| Error::BadRow {
                row,
                message: format!("unparseable date {:?}", field(date_idx)),
            })?;
        let raw = field(value_idx);
        let value = raw
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::BadRow {
                row,
                message: format!("non-numeric value {raw:?} in column `{column}`"),
            })?;
        rows.push((date, value));
    }
    if rows.is_empty() {
        return Err(Error::Empty("no data rows".into()));
    }
    rows.sort_by_key(|&(d, _)| d);
    if let Some(pair) = rows.windows(2).find(|p| p[0].0 == p[1].0) {
        return Err(Error::DuplicateDate(pair[0].0));
    }
    let (dates, values) = rows.into_iter().unzip();
    Series::new(symbol, dates, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "Date,Open,High,Low,Close,Adj Close,Volume\n";

    fn parse(body: &str) -> Result<Series> {
        read_csv(
            format!("{HEADER}{body}").as_bytes(),
            "T",
            DEFAULT_VALUE_COLUMN,
        )
    }

    #[test]
    fn three_rows() {
        let s = parse(
            "2024-01-02,1,1,1,1,10.5,100\n\
             2024-01-03,1,1,1,1,11.0,100\n\
             2024-01-04,1,1,1,1,12.25,100\n",
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.values(), &[10.5, 11.0, 12.25]);
        assert!(s.dates().windows(2).all(|d| d[0] < d[1]));
    }

    #[test]
    fn descending_input_is_sorted() {
        let asc =
            parse("2024-01-02,1,1,1,1,10,1\n2024-01-03,1,1,1,1,11,1\n2024-01-04,1,1,1,1,12,1\n")
                .unwrap();
        let desc =
            parse("2024-01-04,1,1,1,1,12,1\n2024-01-03,1,1,1,1,11,1\n2024-01-02,1,1,1,1,10,1\n")
                .unwrap();
        assert_eq!(asc, desc);
    }

    #[test]
    fn blank_price_names_its_row() {
        let dates = business_days(NaiveDate::from_ymd_opt(2024, 3, 1).unwrap(), 30);
        let mut body = String::new();
        for (i, d) in dates.iter().enumerate() {
            let price = if i == 17 {
                String::new()
            } else {
                format!("{}", 100 + i)
            };
            body.push_str(&format!("{d},1,1,1,1,{price},1000\n"));
        }
        // header is line 1, so data row i sits on line i + 2
        match parse(&body) {
            Err(Error::BadRow { row, .. }) => assert_eq!(row, 19),
            other => panic!("expected BadRow, got {other:?}"),
        }
    }

    #[test]
    fn yahoo_null_rejected() {
        assert!(matches!(
            parse("2024-01-02,1,1,1,1,null,1\n2024-01-03,1,1,1,1,2,1\n"),
            Err(Error::BadRow { row: 2, .. })
        ));
    }

    #[test]
    fn missing_column() {
        let r = read_csv("Date,Close\n2024-01-02,1\n".as_bytes(), "T", "Adj Close");
        assert!(matches!(r, Err(Error::MissingColumn(c)) if c == "Adj Close"));
    }

    #[test]
    fn alternate_column_selectable() {
        let s = read_csv(
            "Date,Close\n2024-01-02,1\n2024-01-03,2\n".as_bytes(),
            "T",
            "Close",
        )
        .unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            read_csv("".as_bytes(), "T", "Close"),
            Err(Error::Empty(_))
        ));
        assert!(matches!(parse(""), Err(Error::Empty(_))));
    }

    #[test]
    fn duplicate_date() {
        assert!(matches!(
            parse("2024-01-02,1,1,1,1,1,1\n2024-01-03,1,1,1,1,2,1\n2024-01-02,1,1,1,1,3,1\n"),
            Err(Error::DuplicateDate(_))
        ));
    }

    #[test]
    fn slice_examples() {
        let s = Series::from_values("T", vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.slice(Window::new(0, 4)).unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.slice(Window::new(1, 2)).unwrap(), &[2.0, 3.0]);
        assert!(matches!(
            s.slice(Window::new(3, 5)),
            Err(Error::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn business_days_skip_weekends() {
        // 2024-03-01 is a Friday
        let d = business_days(NaiveDate::from_ymd_opt(2024, 3, 1).unwrap(), 3);
        assert_eq!(d[1], NaiveDate::from_ymd_opt(2024, 3, 4).unwrap());
        assert_eq!(d[2], NaiveDate::from_ymd_opt(2024, 3, 5).unwrap());
    }

    proptest! {
        #[test]
        fn reserialized_csv_reloads_equal(values in prop::collection::vec(-1e6f64..1e6, 2..60)) {
            let s = Series::from_values("T", values).unwrap();
            let mut buf = Vec::new();
            s.write_csv(&mut buf, DEFAULT_VALUE_COLUMN).unwrap();
            let back = read_csv(buf.as_slice(), "T", DEFAULT_VALUE_COLUMN).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn slice_is_exact(values in prop::collection::vec(-1e3f64..1e3, 2..40), a in 0usize..40, b in 0usize..40) {
            let s = Series::from_values("T", values.clone()).unwrap();
            let w = Window::new(a, b);
            match s.slice(w) {
                Ok(got) => {
                    prop_assert_eq!(got.len(), b);
                    for (g, v) in got.iter().zip(&values[a..a + b]) {
                        prop_assert_eq!(g.to_bits(), v.to_bits());
                    }
                }
                Err(_) => prop_assert!(a + b > values.len()),
            }
        }
    }
}
