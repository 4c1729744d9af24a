use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::scheme::DefectTriple;
use crate::time::{TimeField, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub d: usize,
    pub n: usize,
    pub components: usize,
    pub dtype: Dtype,
    pub order: Order,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "f64")]
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    #[serde(rename = "row-major")]
    RowMajor,
}

/// Header line, then little-endian `f64`, component-major.
pub fn write_components(path: &Path, comps: &[&ScalarField]) -> Result<()> {
    let grid = comps[0].grid();
    let header = SnapshotHeader { d: grid.d(), n: grid.n(), components: comps.len(), dtype: Dtype::F64, order: Order::RowMajor };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for c in comps {
        for v in c.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_components(path: &Path) -> Result<Vec<ScalarField>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
    let grid = Grid::new(header.d, header.n)?;
    let mut buf = vec![0u8; grid.len() * 8];
    let mut out = Vec::with_capacity(header.components);
    for _ in 0..header.components {
        r.read_exact(&mut buf)?;
        let data = buf.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
        out.push(ScalarField::from_vec(grid, data)?);
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Config(format!("{}: trailing bytes after {} components", path.display(), header.components)));
    }
    Ok(out)
}

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    write_components(path, &[f])
}

pub fn write_vector(path: &Path, v: &VectorField) -> Result<()> {
    write_components(path, &v.comps().iter().collect::<Vec<_>>())
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let mut c = read_components(path)?;
    if c.len() != 1 {
        return Err(Error::Config(format!("{}: expected one component, found {}", path.display(), c.len())));
    }
    Ok(c.pop().expect("one"))
}

pub fn read_vector(path: &Path) -> Result<VectorField> {
    VectorField::new(read_components(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct TripleManifest {
    d: usize,
    n: usize,
    n_t: usize,
}

/// `dir/triple.json` plus `rho_kkkk.bin`, `u_kkkk.bin`, `r_kkkk.bin` per snapshot.
pub fn save_triple(dir: &Path, triple: &DefectTriple) -> Result<()> {
    fs::create_dir_all(dir)?;
    let grid = triple.grid();
    let times = triple.times();
    let manifest = TripleManifest { d: grid.d(), n: grid.n(), n_t: times.steps() };
    fs::write(dir.join("triple.json"), serde_json::to_string_pretty(&manifest)?)?;
    for k in 0..times.len() {
        write_scalar(&dir.join(format!("rho_{k:04}.bin")), triple.rho.at(k))?;
        write_vector(&dir.join(format!("u_{k:04}.bin")), triple.u.at(k))?;
        write_vector(&dir.join(format!("r_{k:04}.bin")), triple.r.at(k))?;
    }
    Ok(())
}

pub fn load_triple(dir: &Path) -> Result<DefectTriple> {
    let manifest: TripleManifest = serde_json::from_str(&fs::read_to_string(dir.join("triple.json"))?)?;
    let times = TimeGrid::new(manifest.n_t)?;
    let mut rho = Vec::new();
    let mut u = Vec::new();
    let mut r = Vec::new();
    for k in 0..times.len() {
        rho.push(read_scalar(&dir.join(format!("rho_{k:04}.bin")))?);
        u.push(read_vector(&dir.join(format!("u_{k:04}.bin")))?);
        r.push(read_vector(&dir.join(format!("r_{k:04}.bin")))?);
    }
    let triple = DefectTriple::new(TimeField::new(times, rho)?, TimeField::new(times, u)?, TimeField::new(times, r)?)?;
    if triple.grid() != Grid::new(manifest.d, manifest.n)? {
        return Err(Error::Config(format!("{}: snapshots disagree with the manifest grid", dir.display())));
    }
    Ok(triple)
}
