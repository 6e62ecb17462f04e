use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::signal::Image;

use super::HarnessError;

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

/// `index,value` rows, one per sample. Images are written row-major.
pub fn write_signal_csv(path: &Path, values: &[f64]) -> Result<(), HarnessError> {
    let mut out = create(path)?;
    let mut body = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        body += &format!("{i},{v}\n");
    }
    out.write_all(body.as_bytes()).and_then(|_| out.flush()).map_err(|e| HarnessError::io(path, e))
}

pub fn read_signal_csv(path: &Path) -> Result<Vec<f64>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut values = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let bad = || HarnessError::Format(format!("{}:{}: expected `index,value`", path.display(), n + 1));
        let (i, v) = line.split_once(',').ok_or_else(bad)?;
        let i: usize = i.trim().parse().map_err(|_| bad())?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        if i != values.len() {
            return Err(HarnessError::Format(format!("{}:{}: index {i} out of sequence", path.display(), n + 1)));
        }
        values.push(v);
    }
    Ok(values)
}

/// Binary 16-bit PGM of `|value|`, scaled so the largest magnitude is white.
pub fn write_pgm(path: &Path, image: &Image) -> Result<(), HarnessError> {
    let peak = image.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut bytes = format!("P5\n{} {}\n65535\n", image.cols, image.rows).into_bytes();
    for v in &image.data {
        let level = if peak > 0.0 { (65535.0 * v.abs() / peak).round() as u16 } else { 0 };
        bytes.extend(level.to_be_bytes());
    }
    let mut out = create(path)?;
    out.write_all(&bytes).and_then(|_| out.flush()).map_err(|e| HarnessError::io(path, e))
}

/// `row,col,value` for every entry above `1e-8 · max|value|`; square area in
/// a Hinton plot is proportional to `|value|`.
pub fn write_hinton_csv(path: &Path, image: &Image) -> Result<(), HarnessError> {
    let peak = image.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut body = String::from("row,col,value\n");
    for r in 0..image.rows {
        for c in 0..image.cols {
            let v = image.get(r, c);
            if v.abs() > 1e-8 * peak {
                body += &format!("{r},{c},{v}\n");
            }
        }
    }
    let mut out = create(path)?;
    out.write_all(body.as_bytes()).and_then(|_| out.flush()).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let x = vec![0.0, -1.5, 1e-300, 0.1 + 0.2, f64::MAX];
        write_signal_csv(&path, &x).unwrap();
        assert_eq!(read_signal_csv(&path).unwrap(), x);

        std::fs::write(&path, "index,value\n0,1\n2,3\n").unwrap();
        assert!(read_signal_csv(&path).is_err());
    }

    #[test]
    fn pgm_and_hinton() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image { rows: 2, cols: 3, data: vec![0.0, 2.0, 0.0, -1.0, 0.0, 0.0] };
        let pgm = dir.path().join("a.pgm");
        write_pgm(&pgm, &img).unwrap();
        let bytes = std::fs::read(&pgm).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n65535\n"));
        // 1/2 of 65535 rounds to 32768 = 0x8000.
        assert_eq!(&bytes[bytes.len() - 12..], &[0, 0, 255, 255, 0, 0, 128, 0, 0, 0, 0, 0]);

        let h = dir.path().join("a.csv");
        write_hinton_csv(&h, &img).unwrap();
        assert_eq!(std::fs::read_to_string(&h).unwrap(), "row,col,value\n0,1,2\n1,0,-1\n");
    }
}
