use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DATE_FORMAT: &str = "%Y-%m-%d";
pub const FALLBACK_DATE_FORMAT: &str = "%d-%m-%Y";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Integer,
    Real,
    Categorical,
    Date,
    Boolean,
}

impl ColumnKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnKind::Integer | ColumnKind::Real)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub nullable: bool,
    /// strftime-style input format for date columns. When absent the
    /// default `%Y-%m-%d` is tried first and `%d-%m-%Y` second.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_format: Option<String>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
            nullable: false,
            date_format: None,
        }
    }

    pub fn integer(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Integer)
    }

    pub fn real(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Real)
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Categorical)
    }

    pub fn boolean(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Boolean)
    }

    pub fn date(name: impl Into<String>, format: Option<&str>) -> Self {
        Self {
            date_format: format.map(str::to_owned),
            ..Self::new(name, ColumnKind::Date)
        }
    }

    pub fn nullable(mut self) -> Self {
        self.nullable = true;
        self
    }

    /// Format used when writing this column back out.
    pub fn output_date_format(&self) -> &str {
        self.date_format.as_deref().unwrap_or(DEFAULT_DATE_FORMAT)
    }
}

/// Ordered, name-unique list of column definitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ColumnSpec>", into = "Vec<ColumnSpec>")]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

impl TryFrom<Vec<ColumnSpec>> for Schema {
    type Error = Error;

    fn try_from(columns: Vec<ColumnSpec>) -> Result<Self> {
        Schema::new(columns)
    }
}

impl From<Schema> for Vec<ColumnSpec> {
    fn from(s: Schema) -> Self {
        s.columns
    }
}

/// Customer demographics.
const TABLE2: &[(&str, ColumnKind, bool)] = &[
    ("ID", ColumnKind::Integer, false),
    ("Year_Birth", ColumnKind::Integer, false),
    ("Education", ColumnKind::Categorical, false),
    ("Marital_Status", ColumnKind::Categorical, false),
    ("Income", ColumnKind::Real, true),
    ("Kidhome", ColumnKind::Integer, false),
    ("Teenhome", ColumnKind::Integer, false),
];

/// Purchase history and campaign outcomes.
const TABLE3: &[(&str, ColumnKind, bool)] = &[
    ("Dt_Customer", ColumnKind::Date, false),
    ("Recency", ColumnKind::Integer, false),
    ("MntWines", ColumnKind::Integer, false),
    ("MntFruits", ColumnKind::Integer, false),
    ("MntMeatProducts", ColumnKind::Integer, false),
    ("MntFishProducts", ColumnKind::Integer, false),
    ("MntSweetProducts", ColumnKind::Integer, false),
    ("MntGoldProds", ColumnKind::Integer, false),
    ("NumDealsPurchases", ColumnKind::Integer, false),
    ("NumWebPurchases", ColumnKind::Integer, false),
    ("NumCatalogPurchases", ColumnKind::Integer, false),
    ("NumStorePurchases", ColumnKind::Integer, false),
    ("NumWebVisitsMonth", ColumnKind::Integer, false),
    ("AcceptedCmp1", ColumnKind::Integer, false),
    ("AcceptedCmp2", ColumnKind::Integer, false),
    ("AcceptedCmp3", ColumnKind::Integer, false),
    ("AcceptedCmp4", ColumnKind::Integer, false),
    ("AcceptedCmp5", ColumnKind::Integer, false),
    ("Complain", ColumnKind::Integer, false),
    ("Z_CostContact", ColumnKind::Integer, false),
    ("Z_Revenue", ColumnKind::Integer, false),
    ("Response", ColumnKind::Integer, false),
];

pub const MNT_COLUMNS: [&str; 6] = [
    "MntWines",
    "MntFruits",
    "MntMeatProducts",
    "MntFishProducts",
    "MntSweetProducts",
    "MntGoldProds",
];

pub const CHANNEL_PURCHASE_COLUMNS: [&str; 3] =
    ["NumWebPurchases", "NumCatalogPurchases", "NumStorePurchases"];

fn preset(cols: &[(&str, ColumnKind, bool)]) -> Vec<ColumnSpec> {
    cols.iter()
        .map(|&(name, kind, nullable)| ColumnSpec {
            name: name.to_owned(),
            kind,
            nullable,
            date_format: None,
        })
        .collect()
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name.trim().is_empty() {
                return Err(Error::Schema("column names must be nonempty".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
            if c.kind != ColumnKind::Date && c.date_format.is_some() {
                return Err(Error::Schema(format!(
                    "column `{}` declares a date format but is not a date",
                    c.name
                )));
            }
        }
        Ok(Self { columns })
    }

    /// Demographic attributes (ID through Teenhome).
    pub fn table2() -> Self {
        Self {
            columns: preset(TABLE2),
        }
    }

    /// Purchase and campaign attributes (Dt_Customer through Response).
    pub fn table3() -> Self {
        Self {
            columns: preset(TABLE3),
        }
    }

    /// Both attribute tables, as found in a single campaign export.
    pub fn merged() -> Self {
        let mut columns = preset(TABLE2);
        columns.extend(preset(TABLE3));
        Self { columns }
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::MissingColumn {
            column: name.to_owned(),
        })
    }

    pub fn get(&self, name: &str) -> Option<&ColumnSpec> {
        self.index_of(name).map(|i| &self.columns[i])
    }

    pub(crate) fn push(&mut self, spec: ColumnSpec) -> Result<()> {
        if self.index_of(&spec.name).is_some() {
            return Err(Error::Config(format!("column `{}` already exists", spec.name)));
        }
        self.columns.push(spec);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_expected_sizes() {
        assert_eq!(Schema::table2().len(), 7);
        assert_eq!(Schema::table3().len(), 22);
        assert_eq!(Schema::merged().len(), 29);
        assert!(Schema::merged().index_of("Response").is_some());
    }

    #[test]
    fn rejects_duplicate_names() {
        let err = Schema::new(vec![ColumnSpec::integer("ID"), ColumnSpec::real("ID")]);
        assert!(matches!(err, Err(Error::Schema(_))));
        assert!(Schema::new(vec![ColumnSpec::integer(" ")]).is_err());
    }

    #[test]
    fn serde_validates() {
        let json = r#"[{"name":"a","kind":"real"},{"name":"a","kind":"integer"}]"#;
        assert!(serde_json::from_str::<Schema>(json).is_err());
        let json = r#"[{"name":"d","kind":"date","date_format":"%d/%m/%Y"}]"#;
        let s: Schema = serde_json::from_str(json).unwrap();
        assert_eq!(s.columns()[0].output_date_format(), "%d/%m/%Y");
    }
}
