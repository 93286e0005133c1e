use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{epoch, ColumnKind, ColumnSpec, Dataset, Value, CHANNEL_PURCHASE_COLUMNS, MNT_COLUMNS};

/// `constant + sum(coef * column)`. Date columns contribute their day count
/// since 1970-01-01, booleans 0/1.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearExpr {
    pub constant: f64,
    pub terms: Vec<(String, f64)>,
}

impl LinearExpr {
    /// Parse sums and differences of numbers, column names and
    /// `number * column` products, e.g. `2014 - Year_Birth` or
    /// `Kidhome + Teenhome`.
    pub fn parse(src: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("bad expression {src:?}: {msg}"));
        let mut tokens = Vec::new();
        let chars: Vec<char> = src.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if matches!(c, '+' | '-' | '*') {
                tokens.push(Tok::Op(c));
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                tokens.push(Tok::Num(s.parse().map_err(|_| bad("invalid number"))?));
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Tok::Ident(chars[start..i].iter().collect()));
            } else {
                return Err(bad(&format!("unexpected character {c:?}")));
            }
        }

        let mut expr = LinearExpr { constant: 0.0, terms: Vec::new() };
        let mut pos = 0;
        let mut sign = 1.0;
        let mut expect_term = true;
        while pos < tokens.len() {
            if !expect_term {
                match tokens[pos] {
                    Tok::Op('+') => sign = 1.0,
                    Tok::Op('-') => sign = -1.0,
                    _ => return Err(bad("expected + or -")),
                }
                pos += 1;
                expect_term = true;
                continue;
            }
            if let Tok::Op('-') = tokens[pos] {
                sign = -sign;
                pos += 1;
                continue;
            }
            let (coef, column, used) = match (&tokens[pos], tokens.get(pos + 1), tokens.get(pos + 2)) {
                (Tok::Num(n), Some(Tok::Op('*')), Some(Tok::Ident(c))) => (*n, Some(c.clone()), 3),
                (Tok::Ident(c), Some(Tok::Op('*')), Some(Tok::Num(n))) => (*n, Some(c.clone()), 3),
                (Tok::Num(n), _, _) => (*n, None, 1),
                (Tok::Ident(c), _, _) => (1.0, Some(c.clone()), 1),
                _ => return Err(bad("expected a number or column")),
            };
            match column {
                Some(c) => expr.terms.push((c, sign * coef)),
                None => expr.constant += sign * coef,
            }
            pos += used;
            sign = 1.0;
            expect_term = false;
        }
        if expect_term {
            return Err(bad("dangling operator or empty expression"));
        }
        Ok(expr)
    }

    fn is_integral(&self) -> bool {
        self.constant.fract() == 0.0 && self.terms.iter().all(|(_, c)| c.fract() == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

/// A named derived column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub name: String,
    pub expr: String,
}

impl Recipe {
    pub fn new(name: impl Into<String>, expr: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            expr: expr.into(),
        }
    }

    pub fn age(reference_year: i32) -> Self {
        Self::new("Age", format!("{reference_year} - Year_Birth"))
    }

    pub fn children() -> Self {
        Self::new("Children", "Kidhome + Teenhome")
    }

    pub fn total_spend() -> Self {
        Self::new("TotalSpend", MNT_COLUMNS.join(" + "))
    }

    pub fn total_purchases() -> Self {
        Self::new("TotalPurchases", CHANNEL_PURCHASE_COLUMNS.join(" + "))
    }

    /// Days between enrolment (`Dt_Customer`) and `reference`.
    pub fn tenure_days(reference: NaiveDate) -> Self {
        Self::new(
            "TenureDays",
            format!("{} - Dt_Customer", (reference - epoch()).num_days()),
        )
    }
}

/// Latest enrolment year in `Dt_Customer`, the default reference for ages.
pub fn default_reference_year(ds: &Dataset) -> Result<i32> {
    ds.column("Dt_Customer")?
        .filter_map(|v| v.and_then(Value::as_date))
        .map(|d| d.year())
        .max()
        .ok_or_else(|| Error::IncompleteData {
            column: "Dt_Customer".into(),
        })
}

/// Append one column per recipe, evaluated row by row.
pub fn engineer_features(ds: &Dataset, recipes: &[Recipe]) -> Result<Dataset> {
    let mut out = ds.clone();
    for recipe in recipes {
        let expr = LinearExpr::parse(&recipe.expr)?;
        let mut all_integer = expr.is_integral();
        let mut cols = Vec::with_capacity(expr.terms.len());
        for (name, coef) in &expr.terms {
            let spec = out.column_spec(name)?;
            if spec.kind == ColumnKind::Categorical {
                return Err(Error::Config(format!(
                    "recipe `{}` uses categorical column `{name}`",
                    recipe.name
                )));
            }
            all_integer &= spec.kind != ColumnKind::Real;
            cols.push((out.complete_numeric_column(name)?, *coef));
        }
        let values = (0..out.n_rows())
            .map(|i| {
                let x = cols.iter().fold(expr.constant, |acc, (c, w)| acc + w * c[i]);
                Some(if all_integer {
                    Value::Int(x.round() as i64)
                } else {
                    Value::Real(x)
                })
            })
            .collect();
        let kind = if all_integer { ColumnKind::Integer } else { ColumnKind::Real };
        out = out.with_column(ColumnSpec::new(recipe.name.clone(), kind), values)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Schema;

    fn sample() -> Dataset {
        let mut schema = vec![
            ColumnSpec::integer("Year_Birth"),
            ColumnSpec::integer("Kidhome"),
            ColumnSpec::integer("Teenhome"),
            ColumnSpec::date("Dt_Customer", None),
        ];
        schema.extend(MNT_COLUMNS.iter().map(|c| ColumnSpec::integer(*c)));
        let mut row = vec![
            Some(Value::Int(1980)),
            Some(Value::Int(1)),
            Some(Value::Int(1)),
            Some(Value::Date(NaiveDate::from_ymd_opt(2014, 3, 1).unwrap())),
        ];
        row.extend([100, 10, 50, 20, 5, 15].map(|v| Some(Value::Int(v))));
        Dataset::new(Schema::new(schema).unwrap(), vec![row]).unwrap()
    }

    #[test]
    fn builtin_recipes() {
        let d = sample();
        let year = default_reference_year(&d).unwrap();
        assert_eq!(year, 2014);
        let out = engineer_features(
            &d,
            &[Recipe::children(), Recipe::total_spend(), Recipe::age(year)],
        )
        .unwrap();
        assert_eq!(out.column_spec("Age").unwrap().kind, ColumnKind::Integer);
        assert_eq!(out.cell(0, out.column_index("Children").unwrap()), Some(&Value::Int(2)));
        assert_eq!(out.cell(0, out.column_index("TotalSpend").unwrap()), Some(&Value::Int(200)));
        assert_eq!(out.cell(0, out.column_index("Age").unwrap()), Some(&Value::Int(34)));
    }

    #[test]
    fn tenure_uses_dates() {
        let d = sample();
        let out = engineer_features(&d, &[Recipe::tenure_days(NaiveDate::from_ymd_opt(2014, 3, 11).unwrap())]).unwrap();
        assert_eq!(out.cell(0, out.column_index("TenureDays").unwrap()), Some(&Value::Int(10)));
    }

    #[test]
    fn parser() {
        let e = LinearExpr::parse("2014 - Year_Birth").unwrap();
        assert_eq!(e.constant, 2014.0);
        assert_eq!(e.terms, vec![("Year_Birth".to_string(), -1.0)]);
        let e = LinearExpr::parse("-a + 0.5*b - c*2 + 3").unwrap();
        assert_eq!(e.constant, 3.0);
        assert_eq!(e.terms, vec![("a".into(), -1.0), ("b".into(), 0.5), ("c".into(), -2.0)]);
        assert!(LinearExpr::parse("a +").is_err());
        assert!(LinearExpr::parse("a b").is_err());
        assert!(LinearExpr::parse("a / b").is_err());
        assert!(LinearExpr::parse("").is_err());
    }

    #[test]
    fn collisions_and_bad_columns() {
        let d = sample();
        assert!(matches!(
            engineer_features(&d, &[Recipe::new("Kidhome", "Teenhome")]),
            Err(Error::Config(_))
        ));
        assert!(engineer_features(&d, &[Recipe::new("X", "Nope + 1")]).is_err());
        let half = engineer_features(&d, &[Recipe::new("Half", "0.5 * Kidhome")]).unwrap();
        assert_eq!(half.cell(0, half.column_index("Half").unwrap()), Some(&Value::Real(0.5)));
    }
}
