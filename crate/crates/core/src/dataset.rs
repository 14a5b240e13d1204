//! Finite collections of finite time series in `R^m`.
//!
//! Points are stored flat, series after series, so that datasets with a
//! million two-point series stay compact. The set of transition sources
//! (every point except each series' last) is never materialized; it is
//! implied by [`Dataset::pairs`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
    /// `offsets[k]..offsets[k + 1]` indexes the points of series `k`.
    offsets: Vec<usize>,
    ids: Vec<String>,
}

/// Borrowed view of one series.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub id: &'a str,
    dim: usize,
    coords: &'a [f64],
}

impl<'a> Series<'a> {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, n: usize) -> &'a [f64] {
        &self.coords[n * self.dim..(n + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'a, f64> {
        self.coords.chunks_exact(self.dim)
    }
}

/// Consecutive points `(y_n, y_{n+1})` of one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionPair<'a> {
    pub series: usize,
    pub from: &'a [f64],
    pub to: &'a [f64],
}

impl Dataset {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be positive"));
        }
        Ok(Dataset {
            dim,
            coords: Vec::new(),
            offsets: vec![0],
            ids: Vec::new(),
        })
    }

    /// Builds a dataset from `(id, points)` pairs.
    pub fn from_series<I, S>(dim: usize, series: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<Vec<f64>>)>,
        S: Into<String>,
    {
        let mut d = Dataset::new(dim)?;
        for (id, points) in series {
            let flat: Vec<f64> = points
                .iter()
                .map(|p| {
                    if p.len() == dim {
                        Ok(p.as_slice())
                    } else {
                        Err(Error::param(format!(
                            "point has {} coordinates, expected {dim}",
                            p.len()
                        )))
                    }
                })
                .collect::<Result<Vec<_>>>()?
                .concat();
            d.push_series(id, &flat)?;
        }
        Ok(d)
    }

    /// Appends a series given as a flat coordinate slice.
    pub fn push_series(&mut self, id: impl Into<String>, flat: &[f64]) -> Result<()> {
        if flat.is_empty() || !flat.len().is_multiple_of(self.dim) {
            return Err(Error::param(format!(
                "series needs a positive multiple of {} coordinates, got {}",
                self.dim,
                flat.len()
            )));
        }
        if let Some(bad) = flat.iter().find(|x| !x.is_finite()) {
            return Err(Error::param(format!("non-finite coordinate {bad}")));
        }
        self.coords.extend_from_slice(flat);
        self.offsets.push(self.coords.len() / self.dim);
        self.ids.push(id.into());
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn series_count(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn series(&self, k: usize) -> Series<'_> {
        let (a, b) = (self.offsets[k], self.offsets[k + 1]);
        Series {
            id: &self.ids[k],
            dim: self.dim,
            coords: &self.coords[a * self.dim..b * self.dim],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Series<'_>> + '_ {
        (0..self.series_count()).map(move |k| self.series(k))
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Largest coordinate magnitude over all points (0 for an empty dataset).
    pub fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Transition pairs in series order.
    pub fn pairs(&self) -> impl Iterator<Item = TransitionPair<'_>> + '_ {
        self.iter().enumerate().flat_map(|(k, s)| {
            (1..s.len()).map(move |n| TransitionPair {
                series: k,
                from: s.point(n - 1),
                to: s.point(n),
            })
        })
    }

    pub fn pair_count(&self) -> usize {
        self.iter().map(|s| s.len().saturating_sub(1)).sum()
    }

    /// Same series with every point mapped through `f`.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Dataset> {
        let mut coords = Vec::with_capacity(self.coords.len());
        for p in self.points() {
            let q = f(p);
            if q.len() != self.dim {
                return Err(Error::param("mapped point changed dimension"));
            }
            coords.extend(q);
        }
        Ok(Dataset {
            dim: self.dim,
            coords,
            offsets: self.offsets.clone(),
            ids: self.ids.clone(),
        })
    }
}

pub fn transition_pairs(d: &Dataset) -> Vec<TransitionPair<'_>> {
    d.pairs().collect()
}

// ---------------------------------------------------------------------------
// CSV

fn parse_err(row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        message: message.into(),
    }
}

/// Reads rows `series_id, step, y1, ..., ym`. A leading header row is
/// skipped when its step column is not an integer; `#` starts a comment.
pub fn ingest_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut dim: Option<usize> = None;
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(i64, usize, Vec<f64>)>> = HashMap::new();

    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let row = e.position().map(|p| p.line() as usize).unwrap_or(i + 1);
            parse_err(row, e.to_string())
        })?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if rec.len() < 3 {
            return Err(parse_err(row, "expected series_id, step and at least one coordinate"));
        }
        let step = match rec[1].parse::<i64>() {
            Ok(s) => s,
            Err(_) if i == 0 => continue,
            Err(_) => return Err(parse_err(row, format!("step {:?} is not an integer", &rec[1]))),
        };
        let m = rec.len() - 2;
        match dim {
            None => dim = Some(m),
            Some(d) if d != m => {
                return Err(parse_err(row, format!("expected {d} coordinates, found {m}")))
            }
            _ => {}
        }
        let point = (2..rec.len())
            .map(|c| match rec[c].parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(row, format!("invalid coordinate {:?}", &rec[c]))),
            })
            .collect::<Result<Vec<_>>>()?;
        let id = rec[0].to_string();
        rows.entry(id.clone())
            .or_insert_with(|| {
                order.push(id);
                Vec::new()
            })
            .push((step, row, point));
    }

    let dim = dim.ok_or(Error::Empty("no data rows"))?;
    let mut d = Dataset::new(dim)?;
    for id in order {
        let mut pts = rows.remove(&id).unwrap_or_default();
        pts.sort_by_key(|&(step, row, _)| (step, row));
        for w in pts.windows(2) {
            if w[1].0 == w[0].0 {
                return Err(parse_err(
                    w[1].1,
                    format!("duplicate step {} in series {id}", w[1].0),
                ));
            }
            if w[1].0 != w[0].0 + 1 {
                return Err(parse_err(
                    w[1].1,
                    format!("series {id} jumps from step {} to {}", w[0].0, w[1].0),
                ));
            }
        }
        let flat: Vec<f64> = pts.into_iter().flat_map(|(_, _, p)| p).collect();
        d.push_series(id, &flat)?;
    }
    Ok(d)
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    ingest_csv(BufReader::new(File::open(path)?))
}

/// Writes `series_id,step,y1,...,ym` with a header row and steps from 0.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    write!(w, "series_id,step")?;
    for l in 1..=d.dim() {
        write!(w, ",y{l}")?;
    }
    writeln!(w)?;
    for s in d.iter() {
        for (n, p) in s.points().enumerate() {
            write!(w, "{},{n}", s.id)?;
            for x in p {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Binary rows with a JSON header

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    m: usize,
    format: String,
    series: Vec<BinarySeries>,
}

#[derive(Serialize, Deserialize)]
struct BinarySeries {
    id: String,
    len: usize,
}

const BINARY_FORMAT: &str = "f64-le-rows";

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the coordinates as little-endian `f64` rows to `path` and the
/// series layout to `path.json`.
pub fn write_binary(d: &Dataset, path: &Path) -> Result<()> {
    let header = BinaryHeader {
        m: d.dim(),
        format: BINARY_FORMAT.to_string(),
        series: d
            .iter()
            .map(|s| BinarySeries {
                id: s.id.to_string(),
                len: s.len(),
            })
            .collect(),
    };
    serde_json::to_writer(BufWriter::new(File::create(sidecar_path(path))?), &header)?;
    let mut w = BufWriter::new(File::create(path)?);
    for x in &d.coords {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<Dataset> {
    let header: BinaryHeader =
        serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
    if header.format != BINARY_FORMAT {
        return Err(Error::param(format!("unknown binary format {}", header.format)));
    }
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let expected: usize = header.series.iter().map(|s| s.len).sum::<usize>() * header.m * 8;
    if bytes.len() != expected {
        return Err(Error::param(format!(
            "binary body has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let coords: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    let mut d = Dataset::new(header.m)?;
    let mut at = 0;
    for s in header.series {
        let n = s.len * header.m;
        d.push_series(s.id, &coords[at..at + n])?;
        at += n;
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Preprocessing

fn pooled_moments(d: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let m = d.dim();
    let n = d.point_count() as f64;
    let mut mean = vec![0.0; m];
    for p in d.points() {
        for (acc, x) in mean.iter_mut().zip(p) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= n);
    let mut var = vec![0.0; m];
    for p in d.points() {
        for l in 0..m {
            let e = p[l] - mean[l];
            var[l] += e * e;
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    (mean, std)
}

/// Zero mean, unit (population) standard deviation per coordinate, using
/// statistics pooled over all series.
pub fn standardize(d: &Dataset) -> Result<Dataset> {
    if d.point_count() == 0 {
        return Err(Error::Empty("dataset has no points"));
    }
    let (mean, std) = pooled_moments(d);
    for (l, (&s, &mu)) in std.iter().zip(&mean).enumerate() {
        if !(s > f64::EPSILON * mu.abs().max(f64::MIN_POSITIVE)) {
            return Err(Error::ZeroVariance { coordinate: l + 1 });
        }
    }
    d.map_points(|p| {
        p.iter()
            .zip(mean.iter().zip(&std))
            .map(|(x, (mu, s))| (x - mu) / s)
            .collect()
    })
}

/// Projects onto the leading `m` principal axes of the pooled covariance and
/// standardizes the scores. Each axis is signed so that its largest loading
/// is positive.
pub fn pca_project(raw: &Dataset, m: usize) -> Result<Dataset> {
    let p = raw.dim();
    if m == 0 || m > p {
        return Err(Error::param(format!("cannot project {p}-dimensional data onto {m} components")));
    }
    let n = raw.point_count();
    if n < 2 {
        return Err(Error::Empty("need at least two points"));
    }
    let (mean, _) = pooled_moments(raw);
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for x in raw.points() {
        for a in 0..p {
            let ea = x[a] - mean[a];
            for b in a..p {
                cov[(a, b)] += ea * (x[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let tol = top * p as f64 * 1e-12;
    let rank = order
        .iter()
        .filter(|&&i| top > 0.0 && eig.eigenvalues[i] > tol)
        .count();
    if rank < m {
        return Err(Error::DegenerateCovariance { rank, required: m });
    }
    let axes: Vec<Vec<f64>> = order[..m]
        .iter()
        .map(|&i| {
            let col: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let lead = col
                .iter()
                .copied()
                .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
            let sign = if lead < 0.0 { -1.0 } else { 1.0 };
            col.into_iter().map(|x| sign * x).collect()
        })
        .collect();

    let mut out = Dataset::new(m)?;
    let mean = &mean;
    let axes = &axes;
    for s in raw.iter() {
        let flat: Vec<f64> = s
            .points()
            .flat_map(|x| {
                axes.iter().map(move |axis| {
                    axis.iter()
                        .zip(x.iter().zip(mean))
                        .map(|(a, (xi, mu))| a * (xi - mu))
                        .sum::<f64>()
                })
            })
            .collect();
        out.push_series(s.id, &flat)?;
    }
    standardize(&out)
}

/// Splits each series into `stride` series, the `c`-th taking every
/// `stride`-th point starting at offset `c`. Output ids are `"{id}#{c}"`.
pub fn reindex_interleave(d: &Dataset, stride: usize) -> Result<Dataset> {
    if stride < 1 {
        return Err(Error::param("stride must be at least 1"));
    }
    if stride == 1 {
        return Ok(d.clone());
    }
    let mut out = Dataset::new(d.dim())?;
    for s in d.iter() {
        if s.len() < stride {
            return Err(Error::param(format!(
                "series {} has {} points, fewer than stride {stride}",
                s.id,
                s.len()
            )));
        }
        for c in 0..stride {
            let flat: Vec<f64> = (c..s.len())
                .step_by(stride)
                .flat_map(|n| s.point(n).iter().copied())
                .collect();
            out.push_series(format!("{}#{c}", s.id), &flat)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_d(series: &[&[f64]]) -> Dataset {
        Dataset::from_series(
            1,
            series
                .iter()
                .enumerate()
                .map(|(k, s)| (format!("s{k}"), s.iter().map(|&x| vec![x]).collect())),
        )
        .unwrap()
    }

    #[test]
    fn csv_basic() {
        let d = ingest_csv("a,0,1.0,2.0\na,1,1.5,2.5\n".as_bytes()).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.series_count(), 1);
        assert_eq!(d.series(0).point(1), &[1.5, 2.5]);
    }

    #[test]
    fn csv_sorts_steps() {
        let a = ingest_csv("a,0,1.0\na,1,2.0\na,2,3.0\n".as_bytes()).unwrap();
        let b = ingest_csv("a,2,3.0\na,0,1.0\na,1,2.0\n".as_bytes()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_header_and_comments() {
        let d = ingest_csv("series_id,step,y1\n# note\nx,1,0.5\nx,2,0.25\n".as_bytes()).unwrap();
        assert_eq!(d.point_count(), 2);
    }

    #[test]
    fn csv_errors_name_the_row() {
        let ragged = ingest_csv("a,0,1.0,2.0\na,1,1.0,2.0,3.0\n".as_bytes()).unwrap_err();
        assert!(matches!(ragged, Error::Parse { row: 2, .. }), "{ragged}");

        let nan = ingest_csv("a,0,1.0\na,1,NaN\n".as_bytes()).unwrap_err();
        assert!(matches!(nan, Error::Parse { row: 2, .. }), "{nan}");

        let dup = ingest_csv("a,0,1.0\nb,0,1.0\na,0,2.0\n".as_bytes()).unwrap_err();
        assert!(matches!(dup, Error::Parse { row: 3, .. }), "{dup}");

        let gap = ingest_csv("a,0,1.0\na,2,2.0\n".as_bytes()).unwrap_err();
        assert!(matches!(gap, Error::Parse { row: 2, .. }), "{gap}");

        assert!(matches!(ingest_csv("".as_bytes()), Err(Error::Empty(_))));
    }

    #[test]
    fn csv_round_trip() {
        let d = Dataset::from_series(
            2,
            [
                ("p", vec![vec![0.1, -2.5], vec![1e-17, 3.0]]),
                ("q", vec![vec![1.0 / 3.0, 7.0]]),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        assert_eq!(ingest_csv(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.bin");
        let d = Dataset::from_series(
            2,
            [
                ("p", vec![vec![0.1, -2.5], vec![f64::MIN_POSITIVE, 3.0]]),
                ("q", vec![vec![1.0 / 3.0, 7.0]]),
            ],
        )
        .unwrap();
        write_binary(&d, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 6 * 8);
        assert_eq!(read_binary(&path).unwrap(), d);
    }

    #[test]
    fn standardize_examples() {
        let d = one_d(&[&[0.0, 2.0]]);
        let s = standardize(&d).unwrap();
        assert_eq!(s.series(0).point(0), &[-1.0]);
        assert_eq!(s.series(0).point(1), &[1.0]);

        let again = standardize(&s).unwrap();
        for (a, b) in again.points().zip(s.points()) {
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-12);
        }

        let flat = Dataset::from_series(2, [("a", vec![vec![1.0, 10.0], vec![3.0, 10.0]])]).unwrap();
        assert!(matches!(standardize(&flat), Err(Error::ZeroVariance { coordinate: 2 })));
    }

    #[test]
    fn pca_axis_aligned() {
        // var(x) = 4, var(y) = 1, uncorrelated
        let pts = vec![vec![-2.0, -1.0], vec![2.0, -1.0], vec![-2.0, 1.0], vec![2.0, 1.0]];
        let d = Dataset::from_series(2, [("a", pts.clone())]).unwrap();
        let out = pca_project(&d, 1).unwrap();
        let expect = standardize(&Dataset::from_series(1, [("a", pts.iter().map(|p| vec![p[0]]).collect())]).unwrap()).unwrap();
        for (a, b) in out.points().zip(expect.points()) {
            assert_abs_diff_eq!(a[0].abs(), b[0].abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn pca_rejects_identical_points() {
        let d = Dataset::from_series(3, [("a", vec![vec![1.0, 2.0, 3.0]; 5])]).unwrap();
        assert!(matches!(pca_project(&d, 1), Err(Error::DegenerateCovariance { rank: 0, .. })));
    }

    #[test]
    fn pca_scores_are_white() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mix = [
            [1.0, 0.2, 0.0, -0.4, 0.3],
            [0.0, 1.5, 0.7, 0.1, 0.0],
            [0.2, 0.0, 0.5, 0.0, 0.9],
            [0.0, 0.3, 0.0, 0.25, 0.1],
            [0.1, 0.0, 0.0, 0.0, 0.05],
        ];
        let series: Vec<(String, Vec<Vec<f64>>)> = (0..4)
            .map(|k| {
                let pts = (0..100)
                    .map(|_| {
                        let z: Vec<f64> = (0..5).map(|_| rng.random::<f64>() - 0.5).collect();
                        (0..5).map(|i| (0..5).map(|j| mix[i][j] * z[j]).sum()).collect()
                    })
                    .collect();
                (format!("s{k}"), pts)
            })
            .collect();
        let d = Dataset::from_series(5, series).unwrap();
        let out = pca_project(&d, 2).unwrap();
        let n = out.point_count() as f64;
        let (mut s00, mut s11, mut s01) = (0.0, 0.0, 0.0);
        for p in out.points() {
            s00 += p[0] * p[0];
            s11 += p[1] * p[1];
            s01 += p[0] * p[1];
        }
        assert_abs_diff_eq!(s00 / n, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(s11 / n, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(s01 / n, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn interleave_examples() {
        let d = one_d(&[&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]]);
        let r = reindex_interleave(&d, 4).unwrap();
        let got: Vec<Vec<f64>> = r.iter().map(|s| s.points().map(|p| p[0]).collect()).collect();
        assert_eq!(got, vec![vec![0.0, 4.0], vec![1.0, 5.0], vec![2.0], vec![3.0]]);
        assert_eq!(r.pair_count(), 2);

        assert_eq!(reindex_interleave(&d, 1).unwrap(), d);
        assert!(reindex_interleave(&d, 0).is_err());
    }

    #[test]
    fn interleave_preset_shape() {
        let series: Vec<Vec<f64>> = (0..30).map(|a| (0..400).map(|n| (a * 1000 + n) as f64).collect()).collect();
        let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
        let r = reindex_interleave(&one_d(&refs), 4).unwrap();
        assert_eq!(r.series_count(), 120);
        assert!(r.iter().all(|s| s.len() == 100));
    }

    #[test]
    fn pair_counts() {
        let ninety: Vec<f64> = (0..90).map(|n| n as f64).collect();
        assert_eq!(transition_pairs(&one_d(&[&ninety])).len(), 89);
        assert_eq!(transition_pairs(&one_d(&[&[1.0]])).len(), 0);
        let d = one_d(&[&[1.0, 2.0, 3.0], &[10.0, 20.0]]);
        let pairs = transition_pairs(&d);
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|p| (p.from[0] < 5.0) == (p.to[0] < 5.0)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dataset() -> impl Strategy<Value = Dataset> {
            prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 1..12), 1..6).prop_map(|ss| {
                let refs: Vec<&[f64]> = ss.iter().map(|s| s.as_slice()).collect();
                one_d(&refs)
            })
        }

        proptest! {
            #[test]
            fn standardized_moments(d in dataset()) {
                prop_assume!(d.point_count() > 1);
                if let Ok(s) = standardize(&d) {
                    let (mean, std) = pooled_moments(&s);
                    prop_assert!(mean[0].abs() < 1e-10);
                    prop_assert!((std[0] - 1.0).abs() < 1e-10);
                }
            }

            #[test]
            fn pairs_stay_within_series(d in dataset()) {
                // tag each point with its series index in the coordinate itself
                let tagged = Dataset::from_series(1, d.iter().enumerate().map(|(k, s)| {
                    (s.id.to_string(), (0..s.len()).map(|_| vec![k as f64]).collect())
                })).unwrap();
                let pairs = transition_pairs(&tagged);
                prop_assert_eq!(pairs.len(), d.pair_count());
                for p in pairs {
                    prop_assert_eq!(p.from[0], p.to[0]);
                    prop_assert_eq!(p.from[0], p.series as f64);
                }
            }

            #[test]
            fn interleave_preserves_points(d in dataset(), stride in 1usize..4) {
                prop_assume!(d.iter().all(|s| s.len() >= stride));
                let r = reindex_interleave(&d, stride).unwrap();
                let mut a: Vec<f64> = d.points().map(|p| p[0]).collect();
                let mut b: Vec<f64> = r.points().map(|p| p[0]).collect();
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                prop_assert_eq!(a, b);
            }
        }
    }
}
