//! Block-Hankel signal matrices `col(U, Y)` and their online maintenance.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::linalg::{vstack, OrderedSvd};
use crate::plant::DataRecord;

/// `rows x (len - rows + 1)` Hankel matrix with `h[i][j] = seq[i + j]`.
pub fn hankel(seq: &[f64], rows: usize) -> Result<DMatrix<f64>> {
    if rows == 0 || rows > seq.len() {
        return Err(Error::DataTooShort {
            needed: rows.max(1),
            available: seq.len(),
        });
    }
    let cols = seq.len() - rows + 1;
    Ok(DMatrix::from_fn(rows, cols, |i, j| seq[i + j]))
}

/// Whether `u` is persistently exciting of the given order, i.e. its
/// `order`-row Hankel matrix has full row rank. Singular values below
/// `max(rows, cols) * eps * s_1` count as zero.
pub fn pe_order(u: &[f64], order: usize) -> bool {
    match hankel(u, order) {
        Ok(h) => OrderedSvd::new(&h).rank() == order,
        Err(_) => false,
    }
}

/// Input and output Hankel blocks sharing the past/future split
/// `L = l0 + lp` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    u: DMatrix<f64>,
    y: DMatrix<f64>,
    l0: usize,
    lp: usize,
    compressed: bool,
}

impl SignalMatrix {
    pub fn from_signals(u: &[f64], y: &[f64], l0: usize, lp: usize) -> Result<Self> {
        check_len("signal matrix output length", u.len(), y.len())?;
        let l = l0 + lp;
        if lp == 0 {
            return Err(Error::InvalidParameter {
                name: "lp",
                reason: "prediction horizon must be at least one".into(),
            });
        }
        if u.len() < l {
            return Err(Error::DataTooShort {
                needed: l,
                available: u.len(),
            });
        }
        Ok(Self {
            u: hankel(u, l)?,
            y: hankel(y, l)?,
            l0,
            lp,
            compressed: false,
        })
    }

    pub fn build(data: &DataRecord, l0: usize, lp: usize) -> Result<Self> {
        Self::from_signals(&data.u, &data.y, l0, lp)
    }

    /// Assemble from explicit blocks (no Hankel structure implied).
    pub fn from_blocks(u: DMatrix<f64>, y: DMatrix<f64>, l0: usize, lp: usize) -> Result<Self> {
        check_len("signal matrix rows", l0 + lp, u.nrows())?;
        check_len("signal matrix output rows", u.nrows(), y.nrows())?;
        check_len("signal matrix output columns", u.ncols(), y.ncols())?;
        Ok(Self {
            u,
            y,
            l0,
            lp,
            compressed: false,
        })
    }

    pub fn l0(&self) -> usize {
        self.l0
    }

    pub fn lp(&self) -> usize {
        self.lp
    }

    pub fn depth(&self) -> usize {
        self.l0 + self.lp
    }

    pub fn columns(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_compressed(&self) -> bool {
        self.compressed
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn u_past(&self) -> DMatrix<f64> {
        self.u.rows(0, self.l0).into_owned()
    }

    pub fn u_future(&self) -> DMatrix<f64> {
        self.u.rows(self.l0, self.lp).into_owned()
    }

    pub fn y_past(&self) -> DMatrix<f64> {
        self.y.rows(0, self.l0).into_owned()
    }

    pub fn y_future(&self) -> DMatrix<f64> {
        self.y.rows(self.l0, self.lp).into_owned()
    }

    /// `col(U, Y)`.
    pub fn stacked(&self) -> DMatrix<f64> {
        vstack(&[&self.u, &self.y])
    }

    /// `col(U, Y) col(U, Y)^T`; compression and re-basing leave it unchanged.
    pub fn gram(&self) -> DMatrix<f64> {
        let s = self.stacked();
        &s * s.transpose()
    }

    pub fn is_hankel(&self) -> bool {
        let check = |m: &DMatrix<f64>| {
            (0..m.nrows().saturating_sub(1)).all(|i| (0..m.ncols() - 1).all(|j| m[(i + 1, j)] == m[(i, j + 1)]))
        };
        check(&self.u) && check(&self.y)
    }

    /// Replace `col(U, Y) = W S V^T` by the square `W S_{2L}`. Returns the
    /// matrix unchanged (and not flagged compressed) when `M < 2L`.
    pub fn compress(&self) -> SignalMatrix {
        let l = self.depth();
        if self.columns() < 2 * l {
            return self.clone();
        }
        let svd = OrderedSvd::new(&self.stacked());
        let ws = &svd.u * DMatrix::from_diagonal(&svd.s);
        Self {
            u: ws.rows(0, l).into_owned(),
            y: ws.rows(l, l).into_owned(),
            l0: self.l0,
            lp: self.lp,
            compressed: true,
        }
    }

    /// `[gamma U, u_win; gamma Y, y_win]` without any recompression.
    pub fn append_column(&self, u_win: &[f64], y_win: &[f64], gamma: f64) -> Result<SignalMatrix> {
        let l = self.depth();
        check_len("online input window", l, u_win.len())?;
        check_len("online output window", l, y_win.len())?;
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("forgetting factor must lie in (0, 1], got {gamma}"),
            });
        }
        let m = self.columns();
        let mut u = DMatrix::zeros(l, m + 1);
        let mut y = DMatrix::zeros(l, m + 1);
        u.columns_mut(0, m).copy_from(&(&self.u * gamma));
        y.columns_mut(0, m).copy_from(&(&self.y * gamma));
        for i in 0..l {
            u[(i, m)] = u_win[i];
            y[(i, m)] = y_win[i];
        }
        Ok(Self {
            u,
            y,
            l0: self.l0,
            lp: self.lp,
            compressed: false,
        })
    }

    /// Forgetting-factor update with a new length-`L` window; recompresses to
    /// `2L` columns when the input was compressed or the result exceeds `2L`.
    pub fn append_online(&self, u_win: &[f64], y_win: &[f64], gamma: f64) -> Result<SignalMatrix> {
        let grown = self.append_column(u_win, y_win, gamma)?;
        if self.compressed || grown.columns() > 2 * self.depth() {
            Ok(grown.compress())
        } else {
            Ok(grown)
        }
    }
}

/// Row-major CSV with a header row of column indices.
pub fn write_matrix_csv<W: Write>(writer: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record((0..m.ncols()).map(|j| j.to_string()))?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut r = csv::Reader::from_reader(reader);
    let cols = r.headers()?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec?;
        check_len("matrix csv row", cols, rec.len())?;
        for field in rec.iter() {
            values.push(parse_f64(field)?);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// `t,u,y,y0` per sample.
pub fn write_data_csv<W: Write>(writer: W, data: &DataRecord) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "u", "y", "y0"])?;
    for t in 0..data.len() {
        w.write_record([
            t.to_string(),
            format!("{:e}", data.u[t]),
            format!("{:e}", data.y[t]),
            format!("{:e}", data.y0[t]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Signals read back from [`write_data_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedSignals {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub y0: Vec<f64>,
}

pub fn read_data_csv<R: Read>(reader: R) -> Result<RecordedSignals> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = RecordedSignals {
        u: Vec::new(),
        y: Vec::new(),
        y0: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        check_len("data csv row", 4, rec.len())?;
        out.u.push(parse_f64(&rec[1])?);
        out.y.push(parse_f64(&rec[2])?);
        out.y0.push(parse_f64(&rec[3])?);
    }
    Ok(out)
}

fn parse_f64(field: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|e| Error::Config {
        path: "csv".into(),
        message: format!("cannot parse `{field}` as a number: {e}"),
    })
}
