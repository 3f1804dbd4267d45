//! The diagram file format: a JSON document with `field`, `poset`,
//! `complexes` and `maps` sections, plus optional `double` and `filtered`
//! sections. Matrices are nested integer arrays (row-major); zero matrices
//! are omitted and reconstructed from the stated dimensions, so
//! parse-serialize round trips are exact on the structure.

use std::collections::BTreeMap;

use hodiag_core::chain::{ChainComplex, ChainMap};
use hodiag_core::diagram::Diagram;
use hodiag_core::exactalg::{FieldSpec, Matrix};
use hodiag_core::poset::Poset;
use hodiag_core::specseq::{DoubleComplex, FilteredComplex};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum FormatError {
    Syntax(String),
    Validation(String),
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatError::Syntax(e) => write!(f, "syntax error: {e}"),
            FormatError::Validation(e) => write!(f, "validation error: {e}"),
        }
    }
}

impl std::error::Error for FormatError {}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Default)]
pub struct FieldSection {
    pub p: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Default)]
pub struct PosetSection {
    pub objects: Vec<String>,
    pub covers: Vec<(String, String)>,
}

/// A complex: per-degree dimensions and the nonzero differentials keyed by
/// source degree (as strings, for stable JSON maps).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Default)]
pub struct ComplexSection {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub d: BTreeMap<String, Vec<Vec<u64>>>,
}

/// A chain map: nonzero per-degree components keyed by degree.
pub type MapSection = BTreeMap<String, Vec<Vec<u64>>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Default)]
pub struct DoubleSection {
    pub columns: Vec<ComplexSection>,
    /// `maps[i]` is the horizontal map `C_{i+1} -> C_i`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub maps: Vec<MapSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Default)]
pub struct FilteredSection {
    pub stages: Vec<ComplexSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inclusions: Vec<MapSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DiagramFile {
    pub field: FieldSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poset: Option<PosetSection>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub complexes: BTreeMap<String, ComplexSection>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub maps: BTreeMap<String, MapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub double: Option<DoubleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtered: Option<FilteredSection>,
}

pub fn parse(text: &str) -> Result<DiagramFile, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))
}

pub fn serialize(file: &DiagramFile) -> String {
    serde_json::to_string_pretty(file).expect("file sections serialize")
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<u64>> {
    (0..m.rows()).map(|r| m.row(r)).collect()
}

fn rows_to_matrix(
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: &[Vec<u64>],
    what: &str,
) -> Result<Matrix, FormatError> {
    if data.len() != rows {
        return Err(FormatError::Validation(format!(
            "{what}: expected {rows} rows, found {}",
            data.len()
        )));
    }
    let mut m = Matrix::zeros(field, rows, cols);
    for (r, row) in data.iter().enumerate() {
        if row.len() != cols {
            return Err(FormatError::Validation(format!(
                "{what}: row {r} has {} entries, expected {cols}",
                row.len()
            )));
        }
        for (c, &v) in row.iter().enumerate() {
            m.set(r, c, v);
        }
    }
    Ok(m)
}

pub fn complex_from_section(
    field: FieldSpec,
    section: &ComplexSection,
    what: &str,
) -> Result<ChainComplex, FormatError> {
    let dims = &section.dims;
    let mut diffs = Vec::new();
    for n in 1..dims.len() {
        let key = n.to_string();
        let m = match section.d.get(&key) {
            Some(rows) => rows_to_matrix(
                field,
                dims[n - 1],
                dims[n],
                rows,
                &format!("{what} d[{n}]"),
            )?,
            None => Matrix::zeros(field, dims[n - 1], dims[n]),
        };
        diffs.push(m);
    }
    ChainComplex::new(field, dims.clone(), diffs)
        .map_err(|e| FormatError::Validation(format!("{what}: {e}")))
}

pub fn complex_to_section(c: &ChainComplex) -> ComplexSection {
    let mut d = BTreeMap::new();
    for n in 1..c.len() {
        let m = c.d_at(n);
        if !m.is_zero() {
            d.insert(n.to_string(), matrix_to_rows(&m));
        }
    }
    ComplexSection {
        dims: c.dims().to_vec(),
        d,
    }
}

pub fn map_from_section(
    field: FieldSpec,
    src: &ChainComplex,
    tgt: &ChainComplex,
    section: &MapSection,
    what: &str,
) -> Result<ChainMap, FormatError> {
    let len = src.len().max(tgt.len());
    let mut comps = Vec::new();
    for n in 0..len {
        let key = n.to_string();
        let m = match section.get(&key) {
            Some(rows) => rows_to_matrix(
                field,
                tgt.dim_at(n),
                src.dim_at(n),
                rows,
                &format!("{what} f[{n}]"),
            )?,
            None => Matrix::zeros(field, tgt.dim_at(n), src.dim_at(n)),
        };
        comps.push(m);
    }
    ChainMap::new(src.clone(), tgt.clone(), comps)
        .map_err(|e| FormatError::Validation(format!("{what}: {e}")))
}

pub fn map_to_section(f: &ChainMap) -> MapSection {
    let mut out = BTreeMap::new();
    let len = f.source().len().max(f.target().len());
    for n in 0..len {
        let m = f.f_at(n);
        if !m.is_zero() {
            out.insert(n.to_string(), matrix_to_rows(&m));
        }
    }
    out
}

/// Interprets the poset/complexes/maps sections as a validated diagram.
pub fn diagram_from_file(
    file: &DiagramFile,
    prime_override: Option<u64>,
) -> Result<(Diagram, FieldSpec), FormatError> {
    let p = prime_override.unwrap_or(file.field.p);
    let field = FieldSpec::new(p).map_err(|e| FormatError::Validation(e.to_string()))?;
    let poset = file
        .poset
        .as_ref()
        .ok_or_else(|| FormatError::Validation("missing poset section".into()))?;
    let mut rels = Vec::new();
    let index_of = |label: &str| -> Result<usize, FormatError> {
        poset
            .objects
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| FormatError::Validation(format!("unknown object {label:?}")))
    };
    for (a, b) in &poset.covers {
        rels.push((index_of(a)?, index_of(b)?));
    }
    let index = Poset::new(poset.objects.clone(), &rels)
        .map_err(|e| FormatError::Validation(e.to_string()))?;
    let mut objects = Vec::new();
    for label in &poset.objects {
        let section = file.complexes.get(label).ok_or_else(|| {
            FormatError::Validation(format!("missing complex for object {label:?}"))
        })?;
        objects.push(complex_from_section(field, section, label)?);
    }
    let mut arrows = BTreeMap::new();
    for &(a, b) in index.covers() {
        let key = format!("{}<{}", index.label(a), index.label(b));
        let section = file
            .maps
            .get(&key)
            .cloned()
            .unwrap_or_default();
        let f = map_from_section(field, &objects[a], &objects[b], &section, &key)?;
        arrows.insert((a, b), f);
    }
    let d = Diagram::new(index, objects, arrows)
        .map_err(|e| FormatError::Validation(e.to_string()))?;
    Ok((d, field))
}

pub fn diagram_to_file(d: &Diagram) -> DiagramFile {
    let index = d.index();
    let poset = PosetSection {
        objects: index.labels().to_vec(),
        covers: index
            .covers()
            .iter()
            .map(|&(a, b)| (index.label(a).to_string(), index.label(b).to_string()))
            .collect(),
    };
    let mut complexes = BTreeMap::new();
    for (i, label) in index.labels().iter().enumerate() {
        complexes.insert(label.clone(), complex_to_section(d.object(i)));
    }
    let mut maps = BTreeMap::new();
    for &(a, b) in index.covers() {
        let section = map_to_section(d.arrow(a, b));
        if !section.is_empty() {
            maps.insert(
                format!("{}<{}", index.label(a), index.label(b)),
                section,
            );
        }
    }
    DiagramFile {
        field: FieldSection {
            p: d.field().p(),
        },
        poset: Some(poset),
        complexes,
        maps,
        double: None,
        filtered: None,
    }
}

pub fn double_from_file(
    file: &DiagramFile,
    prime_override: Option<u64>,
) -> Result<DoubleComplex, FormatError> {
    let p = prime_override.unwrap_or(file.field.p);
    let field = FieldSpec::new(p).map_err(|e| FormatError::Validation(e.to_string()))?;
    let section = file
        .double
        .as_ref()
        .ok_or_else(|| FormatError::Validation("missing double section".into()))?;
    let mut columns = Vec::new();
    for (i, c) in section.columns.iter().enumerate() {
        columns.push(complex_from_section(field, c, &format!("column {i}"))?);
    }
    let mut maps = Vec::new();
    for (i, m) in section.maps.iter().enumerate() {
        maps.push(map_from_section(
            field,
            &columns[i + 1],
            &columns[i],
            m,
            &format!("horizontal {}", i + 1),
        )?);
    }
    DoubleComplex::new(columns, maps).map_err(|e| FormatError::Validation(e.to_string()))
}

pub fn filtered_from_file(
    file: &DiagramFile,
    prime_override: Option<u64>,
) -> Result<FilteredComplex, FormatError> {
    let p = prime_override.unwrap_or(file.field.p);
    let field = FieldSpec::new(p).map_err(|e| FormatError::Validation(e.to_string()))?;
    let section = file
        .filtered
        .as_ref()
        .ok_or_else(|| FormatError::Validation("missing filtered section".into()))?;
    let mut stages = Vec::new();
    for (i, c) in section.stages.iter().enumerate() {
        stages.push(complex_from_section(field, c, &format!("stage {i}"))?);
    }
    let mut incs = Vec::new();
    for (i, m) in section.inclusions.iter().enumerate() {
        incs.push(map_from_section(
            field,
            &stages[i],
            &stages[i + 1],
            m,
            &format!("inclusion {i}"),
        )?);
    }
    FilteredComplex::new(stages, incs).map_err(|e| FormatError::Validation(e.to_string()))
}
