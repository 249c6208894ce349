//! The classification tables as data, with batch verification.

pub mod closure;
pub mod generators;
pub mod superintegrable;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use closure::{closure, Bracket, ClosureReport, Relation, CLOSURE_TOL};
pub use superintegrable::{verify_superintegrable, IntegralCheck, SuperintegrableReport, SuperintegrableSystem, VectorPotentialChoice};

use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{Declarations, ZeroTest};
use crate::model::{PotentialConfig, PotentialSpec, Variant};
use crate::verify::{verify, VerificationReport};

pub const SCHEMA_VERSION: u32 = 1;

const TABLE_SOURCES: [&str; 4] = [
    include_str!("../../catalog/table1.json"),
    include_str!("../../catalog/table2.json"),
    include_str!("../../catalog/table3.json"),
    include_str!("../../catalog/table4.json"),
];

/// Expected number of rows per table.
pub const ROW_COUNTS: [usize; 4] = [14, 8, 17, 13];

/// Meaning of the right-most potential column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RightColumn {
    /// Extra scalar potential `S`, entering `e A0 - q S`.
    S,
    /// The effective potential itself.
    #[serde(rename = "A_tilde")]
    ATilde,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableFile {
    pub schema: u32,
    pub table: u8,
    pub caption: String,
    pub right_column: RightColumn,
    pub rows: Vec<RowSpec>,
}

/// Fields shared by the printed template and its variants; variants inherit
/// whatever they leave out.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TemplateFields {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub opaque: BTreeMap<String, usize>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(rename = "A0", default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<String>>,
    /// Generators expected to fail, per variant.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expected_fail: BTreeMap<Variant, Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VariantSpec {
    pub label: String,
    pub note: String,
    #[serde(flatten)]
    pub fields: TemplateFields,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RowSpec {
    pub row: u8,
    #[serde(flatten)]
    pub fields: TemplateFields,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Generators the tables themselves mark as lost under a variant.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub excluded: BTreeMap<Variant, Vec<String>>,
    /// Row-level override of the table-wide claim.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub claim: BTreeMap<Variant, bool>,
}

/// A resolved template: configuration plus generators.
#[derive(Clone, Debug)]
pub struct Template {
    pub label: String,
    pub note: Option<String>,
    pub cfg: PotentialConfig,
    pub generators: Vec<(String, DiffOp)>,
    pub expected_fail: BTreeMap<Variant, Vec<String>>,
    /// Parameters and opaque functions the generator sources may use.
    pub decls: Declarations,
}

impl Template {
    pub fn expected(&self, variant: Variant, generator: &str) -> bool {
        !self.expected_fail.get(&variant).is_some_and(|v| v.iter().any(|g| g == generator))
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub table: u8,
    pub row: u8,
    /// The printed template first, then any best-effort readings.
    pub templates: Vec<Template>,
    pub excluded: BTreeMap<Variant, Vec<String>>,
    pub claim: BTreeMap<Variant, bool>,
}

impl CatalogEntry {
    pub fn id(&self) -> String {
        format!("T{}.{}", self.table, self.row)
    }

    /// The template whose verdicts stand for the row: the last best-effort
    /// reading if any, otherwise the printed one.
    pub fn primary(&self) -> &Template {
        self.templates.last().expect("at least one template")
    }
}

fn build_template(table: &TableFile, label: &str, note: Option<String>, base: &TemplateFields, over: Option<&TemplateFields>) -> Result<Template> {
    let pick = |f: fn(&TemplateFields) -> &Option<String>| over.and_then(|o| f(o).clone()).or_else(|| f(base).clone());
    let mut params = base.params.clone();
    let mut opaque = base.opaque.clone();
    if let Some(o) = over {
        params.extend(o.params.iter().cloned());
        opaque.extend(o.opaque.iter().map(|(k, v)| (k.clone(), *v)));
    }
    let right = pick(|t| &t.right);
    let mut spec = PotentialSpec {
        schema: SCHEMA_VERSION,
        params,
        opaque,
        f: pick(|t| &t.f),
        g: pick(|t| &t.g),
        a0: pick(|t| &t.a0),
        representation: pick(|t| &t.representation),
        couplings: BTreeMap::from([("e".to_string(), "1".to_string())]),
        ..Default::default()
    };
    match table.right_column {
        RightColumn::S => spec.s = right,
        RightColumn::ATilde => spec.a_tilde = Some(right.unwrap_or_else(|| "0".into())),
    }
    let cfg = spec.build()?;
    let decls: Declarations = spec.declarations();
    let gens = over.and_then(|o| o.generators.clone()).or_else(|| base.generators.clone()).unwrap_or_default();
    let mut generators = Vec::new();
    for g in gens {
        let op = DiffOp::parse(&g, &decls, &generators::lookup).map_err(|e| Error::Catalog(format!("T{}: generator `{g}`: {e}", table.table)))?;
        generators.push((g, op));
    }
    let expected_fail = match over {
        Some(o) => o.expected_fail.clone(),
        None => base.expected_fail.clone(),
    };
    for names in expected_fail.values() {
        for n in names {
            if !generators.iter().any(|(g, _)| g == n) {
                return Err(Error::Catalog(format!("T{}: expected_fail names unknown generator `{n}`", table.table)));
            }
        }
    }
    Ok(Template { label: label.to_string(), note, cfg, generators, expected_fail, decls })
}

/// Parse one table file.
pub fn load_table(src: &str) -> Result<Vec<CatalogEntry>> {
    let table: TableFile = serde_json::from_str(src).map_err(|e| Error::Catalog(e.to_string()))?;
    if table.schema != SCHEMA_VERSION {
        return Err(Error::Catalog(format!("unsupported schema version {}", table.schema)));
    }
    let mut out = Vec::new();
    for row in &table.rows {
        let ctx = |e: Error| Error::Catalog(format!("T{}.{}: {e}", table.table, row.row));
        let mut templates = vec![build_template(&table, "as-printed", row.note.clone(), &row.fields, None).map_err(ctx)?];
        for v in &row.variants {
            templates.push(build_template(&table, &v.label, Some(v.note.clone()), &row.fields, Some(&v.fields)).map_err(ctx)?);
        }
        for names in row.excluded.values() {
            for n in names {
                if !templates.iter().any(|t| t.generators.iter().any(|(g, _)| g == n)) {
                    return Err(ctx(Error::Catalog(format!("excluded names unknown generator `{n}`"))));
                }
            }
        }
        out.push(CatalogEntry { table: table.table, row: row.row, templates, excluded: row.excluded.clone(), claim: row.claim.clone() });
    }
    Ok(out)
}

/// The shipped catalog, Tables 1 to 4 in order.
pub fn load_builtin() -> Result<Vec<CatalogEntry>> {
    let mut all = Vec::new();
    for (k, src) in TABLE_SOURCES.iter().enumerate() {
        let rows = load_table(src)?;
        if rows.len() != ROW_COUNTS[k] {
            return Err(Error::Catalog(format!("table {} has {} rows, expected {}", k + 1, rows.len(), ROW_COUNTS[k])));
        }
        all.extend(rows);
    }
    Ok(all)
}

/// What the classification claims for a whole table under a variant: the listed
/// generators survive (`true`) or the set is broken (`false`).
pub fn table_claim(table: u8, variant: Variant) -> bool {
    match variant {
        Variant::Sp => true,
        Variant::QrseH3 => table == 1,
        Variant::QrseH3a => true,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorOutcome {
    pub generator: String,
    pub expected: bool,
    pub report: VerificationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct TemplateOutcome {
    pub label: String,
    pub generators: Vec<GeneratorOutcome>,
    /// Every generator verified as a symmetry.
    pub all_symmetries: bool,
    pub matches_expected: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryReport {
    pub id: String,
    pub table: u8,
    pub row: u8,
    pub variant: Variant,
    pub claim: bool,
    pub templates: Vec<TemplateOutcome>,
    /// The primary template keeps every generator.
    pub reproduced: bool,
    pub matches_expected: bool,
    /// The primary verdicts agree with the tables: for a surviving set each
    /// generator passes unless the table excludes it, for a broken set at
    /// least one generator fails.
    pub agrees_with_tables: bool,
}

impl EntryReport {
    pub fn primary(&self) -> &TemplateOutcome {
        self.templates.last().expect("at least one template")
    }
}

/// Verify every generator of every template of one entry.
pub fn verify_entry(entry: &CatalogEntry, variant: Variant, test: &ZeroTest) -> Result<EntryReport> {
    let mut templates = Vec::new();
    for (k, t) in entry.templates.iter().enumerate() {
        let outcomes: Vec<Result<GeneratorOutcome>> = t
            .generators
            .par_iter()
            .enumerate()
            .map(|(j, (name, op))| {
                let sub = test.fork(((entry.table as u64) << 24) | ((entry.row as u64) << 16) | ((k as u64) << 8) | j as u64);
                let id = format!("{}[{}]:{}", entry.id(), t.label, name);
                let report = verify(&id, op, &t.cfg, variant, &sub, true)?;
                Ok(GeneratorOutcome { generator: name.clone(), expected: t.expected(variant, name), report })
            })
            .collect();
        let generators = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let all_symmetries = generators.iter().all(|g| g.report.symmetry);
        let matches_expected = generators.iter().all(|g| g.report.symmetry == g.expected);
        templates.push(TemplateOutcome { label: t.label.clone(), generators, all_symmetries, matches_expected });
    }
    let reproduced = templates.last().is_some_and(|t| t.all_symmetries);
    let matches_expected = templates.iter().all(|t| t.matches_expected);
    let claim = entry.claim.get(&variant).copied().unwrap_or_else(|| table_claim(entry.table, variant));
    let excluded = entry.excluded.get(&variant);
    let primary = templates.last().expect("at least one template");
    let agrees_with_tables =
        if claim { primary.generators.iter().all(|g| g.report.symmetry != excluded.is_some_and(|x| x.contains(&g.generator))) } else { !reproduced };
    Ok(EntryReport {
        id: entry.id(),
        table: entry.table,
        row: entry.row,
        variant,
        claim,
        templates,
        reproduced,
        matches_expected,
        agrees_with_tables,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub variant: Variant,
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    pub rows: usize,
    pub reproduced: usize,
    pub matches_expected: usize,
    pub agrees_with_tables: usize,
    pub entries: Vec<EntryReport>,
}

impl Summary {
    pub fn all_expected(&self) -> bool {
        self.matches_expected == self.rows
    }
}

/// Verify a list of entries in parallel; the report keeps catalog order.
pub fn verify_all(entries: &[CatalogEntry], variant: Variant, test: &ZeroTest) -> Result<Summary> {
    let reports = entries.par_iter().map(|e| verify_entry(e, variant, test)).collect::<Result<Vec<_>>>()?;
    Ok(Summary {
        schema: SCHEMA_VERSION,
        variant,
        seed: test.seed,
        trials: test.trials,
        tol: test.tol,
        rows: reports.len(),
        reproduced: reports.iter().filter(|r| r.reproduced).count(),
        matches_expected: reports.iter().filter(|r| r.matches_expected).count(),
        agrees_with_tables: reports.iter().filter(|r| r.agrees_with_tables).count(),
        entries: reports,
    })
}

/// Find an entry by table and row.
pub fn find(entries: &[CatalogEntry], table: u8, row: u8) -> Option<&CatalogEntry> {
    entries.iter().find(|e| e.table == table && e.row == row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::verify::symmetry_residual;

    #[test]
    fn free_particle_generators() {
        let h = PotentialConfig { g: Expr::zero(), ..Default::default() }.sp_hamiltonian();
        let test = ZeroTest::new(3).with_trials(16);
        for name in ["P1", "P2", "P3", "G1", "G2", "G3", "L1", "L2", "L3", "J1", "J2", "J3", "D", "A", "P0"] {
            let q = generators::lookup(name, &[]).unwrap();
            assert!(symmetry_residual(&q, &h).is_zero_op(&test).unwrap().zero, "{name}");
        }
    }

    #[test]
    fn catalog_counts() {
        let all = load_builtin().unwrap();
        for (k, n) in ROW_COUNTS.iter().enumerate() {
            assert_eq!(all.iter().filter(|e| e.table as usize == k + 1).count(), *n);
        }
    }
}
