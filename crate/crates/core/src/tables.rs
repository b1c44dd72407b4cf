//! Regeneration of the four published tables and comparison against the
//! embedded golden values.

use std::fmt::Write as _;
use std::io::{Read, Write};

use rug::Rational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{ten_pow_neg, PrecisionContext, RadAngle};
use crate::pipelines::{
    box_joint_pipeline_total, box_pipeline_total, majority_sign_bound, majority_sign_total, triple_sign_bound,
    triple_sign_total, wedge_pipeline_total, CurveCache, PipelineResult, RefMode, SplitPolicy, WedgeConvention,
};
use crate::planner::{k_eps_bound, k_eps_exact, m_table_entry, n_eps, n_eps_bound, FirstStage};

const GOLDEN: [&str; 4] = [
    include_str!("../data/table1.csv"),
    include_str!("../data/table2.csv"),
    include_str!("../data/table3.csv"),
    include_str!("../data/table4.csv"),
];

/// Number of `ε = 10^-t` columns, `t = 1..=10`.
pub const EPS_COLUMNS: u32 = 10;

/// Largest `m` column of the per-`m` table.
pub const M_COLUMNS: u32 = 19;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TableId {
    Sign = 1,
    FirstIteration = 2,
    Iterations = 3,
    PerM = 4,
}

impl TableId {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(TableId::Sign),
            2 => Ok(TableId::FirstIteration),
            3 => Ok(TableId::Iterations),
            4 => Ok(TableId::PerM),
            _ => Err(Error::Invalid(format!("no table {n}; expected 1 to 4"))),
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }
}

/// A table as plain strings: a header and rows of cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableCsv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TableCsv {
    pub fn parse<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rd.headers()?.iter().map(str::to_owned).collect();
        let rows = rd
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_owned).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(TableCsv { header, rows })
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "| {} |", self.header.join(" | "));
        let _ = writeln!(s, "|{}", "---|".repeat(self.header.len()));
        for r in &self.rows {
            let _ = writeln!(s, "| {} |", r.join(" | "));
        }
        s
    }
}

/// Golden values of a table: row label and cells (`None` for a dash).
pub fn golden(id: TableId) -> Vec<(String, Vec<Option<u64>>)> {
    let t = TableCsv::parse(GOLDEN[id as usize - 1].as_bytes()).expect("embedded table parses");
    let label_cols = if id == TableId::PerM { 2 } else { 1 };
    t.rows
        .into_iter()
        .map(|r| {
            let label = r[..label_cols].join("/");
            let cells = r[label_cols..].iter().map(|c| c.parse().ok()).collect();
            (label, cells)
        })
        .collect()
}

pub fn eps_label(t: u32) -> String {
    format!("1e-{t}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub row: String,
    pub column: String,
    /// `None` is a dash.
    pub computed: Option<u64>,
    pub golden: Option<u64>,
    pub matched: bool,
    /// Relative margin of the tightest deciding comparison.
    pub margin: Option<f64>,
    /// Value under the alternate budget convention, for advisory cells.
    pub alternate: Option<u64>,
    /// Mismatches in advisory cells are warnings unless strict.
    pub advisory: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproductionReport {
    pub table: u8,
    pub cells: Vec<Cell>,
}

fn fmt_opt(v: Option<u64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

fn fmt_f(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:e}"))
}

impl ReproductionReport {
    pub fn mismatches(&self, strict: bool) -> Vec<&Cell> {
        self.cells
            .iter()
            .filter(|c| !c.matched && (strict || !c.advisory))
            .collect()
    }

    pub fn warnings(&self, strict: bool) -> Vec<&Cell> {
        if strict {
            return Vec::new();
        }
        self.cells.iter().filter(|c| !c.matched && c.advisory).collect()
    }

    /// The regenerated table laid out like the golden file.
    pub fn table(&self) -> TableCsv {
        let mut header = vec!["row".to_owned()];
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut last: Option<&str> = None;
        for c in &self.cells {
            if last != Some(c.row.as_str()) {
                rows.push(vec![c.row.clone()]);
                last = Some(&c.row);
            }
            let r = rows.last_mut().expect("row pushed");
            r.push(fmt_opt(c.computed));
            if rows.len() == 1 {
                header.push(c.column.clone());
            }
        }
        TableCsv { header, rows }
    }

    /// Per-cell comparison with golden values.
    pub fn detail(&self) -> TableCsv {
        let header = [
            "table",
            "row",
            "column",
            "computed",
            "golden",
            "match",
            "margin",
            "alternate",
            "advisory",
        ]
        .map(str::to_owned)
        .to_vec();
        let rows = self
            .cells
            .iter()
            .map(|c| {
                vec![
                    self.table.to_string(),
                    c.row.clone(),
                    c.column.clone(),
                    fmt_opt(c.computed),
                    fmt_opt(c.golden),
                    c.matched.to_string(),
                    fmt_f(c.margin),
                    c.alternate.map_or_else(String::new, |v| v.to_string()),
                    c.advisory.to_string(),
                ]
            })
            .collect();
        TableCsv { header, rows }
    }

    /// Inverse of [`ReproductionReport::detail`].
    pub fn from_detail(t: &TableCsv) -> Result<Self> {
        let bad = |what: &str| Error::Invalid(format!("malformed report: {what}"));
        let opt = |s: &str| -> Result<Option<u64>> {
            if s == "-" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(s))
            }
        };
        let mut table = 0;
        let mut cells = Vec::new();
        for r in &t.rows {
            if r.len() != 9 {
                return Err(bad("column count"));
            }
            table = r[0].parse().map_err(|_| bad(&r[0]))?;
            cells.push(Cell {
                row: r[1].clone(),
                column: r[2].clone(),
                computed: opt(&r[3])?,
                golden: opt(&r[4])?,
                matched: r[5].parse().map_err(|_| bad(&r[5]))?,
                margin: if r[6].is_empty() {
                    None
                } else {
                    Some(r[6].parse().map_err(|_| bad(&r[6]))?)
                },
                alternate: if r[7].is_empty() {
                    None
                } else {
                    Some(r[7].parse().map_err(|_| bad(&r[7]))?)
                },
                advisory: r[8].parse().map_err(|_| bad(&r[8]))?,
            });
        }
        Ok(ReproductionReport { table, cells })
    }
}

struct Computed {
    value: Option<u64>,
    margin: Option<f64>,
}

fn from_pipeline(r: PipelineResult) -> Computed {
    Computed {
        value: Some(r.total),
        margin: r.min_margin(),
    }
}

fn exact(v: u64) -> Computed {
    Computed {
        value: Some(v),
        margin: None,
    }
}

fn assemble(
    id: TableId,
    specs: Vec<(String, String, bool)>,
    exec: Exec,
    compute: impl Fn(usize) -> Result<Computed> + Sync + Send,
    alternate: impl Fn(usize) -> Result<Option<u64>> + Sync + Send,
) -> Result<ReproductionReport> {
    let gold = golden(id);
    let computed = exec.map_indices(specs.len(), &compute);
    let mut cells = Vec::with_capacity(specs.len());
    for (i, ((row, column, advisory), c)) in specs.into_iter().zip(computed).enumerate() {
        let c = c?;
        let g = gold
            .iter()
            .find(|(label, _)| *label == row)
            .and_then(|(_, cells)| {
                let hdr = TableCsv::parse(GOLDEN[id as usize - 1].as_bytes()).ok()?;
                let offset = if id == TableId::PerM { 2 } else { 1 };
                let pos = hdr.header.iter().position(|h| *h == column)?;
                cells.get(pos - offset).copied()
            })
            .ok_or_else(|| Error::Invalid(format!("no golden value for {row}/{column}")))?;
        let matched = c.value == g;
        let alt = if !matched && advisory { alternate(i)? } else { None };
        cells.push(Cell {
            row,
            column,
            computed: c.value,
            golden: g,
            matched,
            margin: c.margin,
            alternate: alt,
            advisory,
        });
    }
    Ok(ReproductionReport {
        table: id.number(),
        cells,
    })
}

/// The eleven angles of the sign table, largest first.
pub fn sign_table_angles() -> Vec<RadAngle> {
    let mut v: Vec<RadAngle> = (1..=7).rev().map(|k| RadAngle::pi_frac(k, 16)).collect();
    v.extend([32, 64, 128, 256].map(|d| RadAngle::pi_frac(1, d)));
    v
}

fn eps_columns() -> impl Iterator<Item = u32> {
    1..=EPS_COLUMNS
}

pub fn table1(cache: &CurveCache, ctx: PrecisionContext, exec: Exec) -> Result<ReproductionReport> {
    let angles = sign_table_angles();
    let cells: Vec<(RadAngle, u32)> = angles
        .iter()
        .flat_map(|a| eps_columns().map(move |t| (a.clone(), t)))
        .collect();
    let specs = cells
        .iter()
        .map(|(a, t)| (a.to_string(), eps_label(*t), false))
        .collect();
    assemble(
        TableId::Sign,
        specs,
        exec,
        |i| {
            let (a, t) = &cells[i];
            let r = cache.sign(a)?.min_n(&ten_pow_neg(*t), ctx)?;
            Ok(Computed {
                value: Some(r.n as u64),
                margin: Some(r.decision.margin),
            })
        },
        |_| Ok(None),
    )
}

/// A row of the first-iteration table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FirstIterationRow {
    Box(u8, RefMode),
    BoxJoint,
    Wedge(u8, RefMode),
    Sign,
    SignBound,
    MajoritySign,
    MajoritySignBound,
}

impl FirstIterationRow {
    pub fn all() -> Vec<Self> {
        use FirstIterationRow::*;
        let modes = [RefMode::TwoBit, RefMode::ThreeBit, RefMode::Exact];
        let mut v = vec![Box(1, RefMode::Exact)];
        v.extend(modes.map(|m| Box(2, m)));
        v.extend(modes.map(|m| Box(3, m)));
        v.push(BoxJoint);
        v.push(Wedge(1, RefMode::Exact));
        v.extend(modes.map(|m| Wedge(2, m)));
        v.extend(modes.map(|m| Wedge(3, m)));
        v.extend([Sign, SignBound, MajoritySign, MajoritySignBound]);
        v
    }

    pub fn label(self) -> String {
        let stage = |s: u8| ["single", "two", "three"][s as usize - 1];
        match self {
            FirstIterationRow::Box(1, _) => "single_box".into(),
            FirstIterationRow::Box(s, m) => format!("{}_box_{m}", stage(s)),
            FirstIterationRow::Wedge(1, _) => "single_wedge".into(),
            FirstIterationRow::Wedge(s, m) => format!("{}_wedge_{m}", stage(s)),
            FirstIterationRow::BoxJoint => "box_joint".into(),
            FirstIterationRow::Sign => "sign".into(),
            FirstIterationRow::SignBound => "sign_bound".into(),
            FirstIterationRow::MajoritySign => "majority_sign".into(),
            FirstIterationRow::MajoritySignBound => "majority_sign_bound".into(),
        }
    }

    /// Wedge rows and rows with a quantized reference are checked but only
    /// warned about unless strict.
    pub fn advisory(self) -> bool {
        match self {
            FirstIterationRow::Wedge(..) => true,
            FirstIterationRow::Box(_, m) => m != RefMode::Exact,
            _ => false,
        }
    }

    pub fn compute(self, eps: &Rational, cache: &CurveCache, ctx: PrecisionContext) -> Result<PipelineResult> {
        match self {
            FirstIterationRow::Box(s, m) => box_pipeline_total(s, m, eps, SplitPolicy::Equal, cache, ctx),
            FirstIterationRow::Wedge(s, m) => wedge_pipeline_total(s, m, eps, WedgeConvention::Joint, cache, ctx),
            FirstIterationRow::BoxJoint => box_joint_pipeline_total(eps, cache, ctx),
            FirstIterationRow::Sign => triple_sign_total(eps, cache, ctx),
            FirstIterationRow::MajoritySign => majority_sign_total(eps, cache, ctx),
            FirstIterationRow::SignBound | FirstIterationRow::MajoritySignBound => {
                Err(Error::Invalid("bound rows have no pipeline".into()))
            }
        }
    }

    /// Total under the alternate budget convention, where one exists.
    pub fn alternate(self, eps: &Rational, cache: &CurveCache, ctx: PrecisionContext) -> Result<Option<u64>> {
        Ok(match self {
            FirstIterationRow::Box(s, m) => {
                Some(box_pipeline_total(s, m, eps, SplitPolicy::PerStage, cache, ctx)?.total)
            }
            FirstIterationRow::Wedge(s, m) => {
                Some(wedge_pipeline_total(s, m, eps, WedgeConvention::PerComponent, cache, ctx)?.total)
            }
            _ => None,
        })
    }
}

pub fn table2(
    rows: &[FirstIterationRow],
    cache: &CurveCache,
    ctx: PrecisionContext,
    exec: Exec,
) -> Result<ReproductionReport> {
    let cells: Vec<(FirstIterationRow, u32)> = rows.iter().flat_map(|&r| eps_columns().map(move |t| (r, t))).collect();
    let specs = cells
        .iter()
        .map(|(r, t)| (r.label(), eps_label(*t), r.advisory()))
        .collect();
    assemble(
        TableId::FirstIteration,
        specs,
        exec,
        |i| {
            let (row, t) = cells[i];
            let eps = ten_pow_neg(t);
            match row {
                FirstIterationRow::SignBound => Ok(exact(triple_sign_bound(&eps, ctx)?)),
                FirstIterationRow::MajoritySignBound => Ok(exact(majority_sign_bound(&eps, ctx)?)),
                r => Ok(from_pipeline(r.compute(&eps, cache, ctx)?)),
            }
        },
        |i| {
            let (row, t) = cells[i];
            row.alternate(&ten_pow_neg(t), cache, ctx)
        },
    )
}

pub const TABLE3_ROWS: [&str; 6] = [
    "k_eps_sufficient",
    "k_eps_bound",
    "n_eps_triple_sign",
    "n_eps_triple_sign_bound",
    "n_eps_majority",
    "n_eps_majority_bound",
];

pub fn table3(cache: &CurveCache, ctx: PrecisionContext, exec: Exec) -> Result<ReproductionReport> {
    let cells: Vec<(usize, u32)> = (0..TABLE3_ROWS.len())
        .flat_map(|r| eps_columns().map(move |t| (r, t)))
        .collect();
    let specs = cells
        .iter()
        .map(|&(r, t)| (TABLE3_ROWS[r].to_owned(), eps_label(t), false))
        .collect();
    assemble(
        TableId::Iterations,
        specs,
        exec,
        |i| {
            let (r, t) = cells[i];
            let eps = ten_pow_neg(t);
            let stage = |r: usize| {
                if r < 4 {
                    FirstStage::TripleSign
                } else {
                    FirstStage::Majority
                }
            };
            Ok(match r {
                0 => exact(k_eps_exact(&eps, ctx)? as u64),
                1 => exact(k_eps_bound(&eps, ctx)? as u64),
                2 | 4 => exact(n_eps(&eps, stage(r), cache, ctx)?.total),
                _ => exact(n_eps_bound(&eps, stage(r), ctx)?),
            })
        },
        |_| Ok(None),
    )
}

pub fn table4(cache: &CurveCache, ctx: PrecisionContext, exec: Exec) -> Result<ReproductionReport> {
    let stages = [FirstStage::TripleSign, FirstStage::Majority];
    let cells: Vec<(FirstStage, u32, u32)> = stages
        .iter()
        .flat_map(|&s| eps_columns().flat_map(move |t| (1..=M_COLUMNS).map(move |m| (s, t, m))))
        .collect();
    let specs = cells
        .iter()
        .map(|&(s, t, m)| (format!("{s}/{}", eps_label(t)), format!("m{m}"), false))
        .collect();
    assemble(
        TableId::PerM,
        specs,
        exec,
        |i| {
            let (s, t, m) = cells[i];
            let row = m_table_entry(&ten_pow_neg(t), m, s, cache, ctx)?;
            Ok(Computed {
                value: row.map(|r| r.total),
                margin: None,
            })
        },
        |_| Ok(None),
    )
}

/// Regenerates a whole table.
pub fn regenerate(id: TableId, cache: &CurveCache, ctx: PrecisionContext, exec: Exec) -> Result<ReproductionReport> {
    match id {
        TableId::Sign => table1(cache, ctx, exec),
        TableId::FirstIteration => table2(&FirstIterationRow::all(), cache, ctx, exec),
        TableId::Iterations => table3(cache, ctx, exec),
        TableId::PerM => table4(cache, ctx, exec),
    }
}
