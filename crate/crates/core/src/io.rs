//! Deterministic on-disk formats: a flat binary container for fields,
//! JSON-plus-binary environment serialization, and CSV emission with
//! 17-significant-digit floats (the bit-exact regression target).

use crate::env::Environment;
use crate::error::CoreError;
use crate::field::Field;
use crate::grid::TorusGrid;
use std::io::{Read, Write};
use std::path::Path;

const FIELD_MAGIC: &[u8; 8] = b"SLFVFLD1";

/// Format a float with 17 significant digits (round-trip exact for f64).
pub fn format_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write CSV with a header row, comma separators and LF line endings.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<(), CoreError> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Binary field container: magic, u32 (d, n, m), then row-major f64 LE.
pub fn write_field(path: &Path, field: &Field) -> Result<(), CoreError> {
    let grid = field.grid();
    let mut f = std::fs::File::create(path)?;
    f.write_all(FIELD_MAGIC)?;
    for v in [grid.d() as u32, grid.scale() as u32, grid.oversampling() as u32] {
        f.write_all(&v.to_le_bytes())?;
    }
    for v in field.values() {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field, CoreError> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(CoreError::BadContainer("bad magic".into()));
    }
    let mut word = [0u8; 4];
    let mut dims = [0u32; 3];
    for d in &mut dims {
        f.read_exact(&mut word)?;
        *d = u32::from_le_bytes(word);
    }
    let grid = TorusGrid::new(dims[0] as usize, dims[1] as usize, dims[2] as usize)?;
    let mut payload = Vec::new();
    f.read_to_end(&mut payload)?;
    if payload.len() != grid.len() * 8 {
        return Err(CoreError::BadContainer(format!(
            "payload {} bytes, grid needs {}",
            payload.len(),
            grid.len() * 8
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Field::from_values(grid, values))
}

/// Field as CSV (index columns plus value), intended for small grids.
pub fn write_field_csv(path: &Path, field: &Field) -> Result<(), CoreError> {
    let grid = field.grid();
    let nax = grid.axis_len();
    let mut rows = Vec::with_capacity(field.len());
    for (i, v) in field.values().iter().enumerate() {
        let row = match grid.d() {
            1 => vec![i.to_string(), format_g17(*v)],
            _ => vec![(i / nax).to_string(), (i % nax).to_string(), format_g17(*v)],
        };
        rows.push(row);
    }
    let header = if grid.d() == 1 { "i,value" } else { "iy,ix,value" };
    write_csv(path, header, &rows)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct EnvMeta {
    d: usize,
    n: usize,
    m: usize,
    law_tag: String,
    seed: u64,
    c_n: f64,
    hash: u64,
}

/// Environment as metadata JSON plus the box values in a binary sidecar.
pub fn write_environment(dir: &Path, stem: &str, env: &Environment) -> Result<(), CoreError> {
    let grid = env.grid();
    let meta = EnvMeta {
        d: grid.d(),
        n: grid.scale(),
        m: grid.oversampling(),
        law_tag: env.law_tag().to_string(),
        seed: env.seed(),
        c_n: env.c_n(),
        hash: env.hash(),
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| CoreError::BadContainer(e.to_string()))?;
    std::fs::write(dir.join(format!("{stem}.json")), json)?;
    let mut f = std::fs::File::create(dir.join(format!("{stem}.zbin")))?;
    for v in env.z_values() {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn field_container_round_trip() {
        let dir = std::env::temp_dir().join("slfv_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let g = TorusGrid::new(2, 4, 4).unwrap();
        let f = synth::random_band_limited(g, 5, 3);
        let path = dir.join("field.bin");
        write_field(&path, &f).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.grid(), g);
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn g17_round_trips_exactly() {
        for x in [0.1, -1.0 / 3.0, 2.5e-308, 1.23456789012345678e17, 0.0] {
            let s = format_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_is_lf_terminated() {
        let dir = std::env::temp_dir().join("slfv_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        write_csv(&path, "a,b", &[vec!["1".into(), "2".into()]]).unwrap();
        let body = std::fs::read(&path).unwrap();
        assert_eq!(body, b"a,b\n1,2\n");
    }
}
