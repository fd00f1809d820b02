//! POI category table: 4-digit NAICS industry groups bucketed into 20 named
//! categories, each flagged essential or non-essential.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a [`CategoryTable`]. Doubles as the node color in attributed motifs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CategoryId(pub u8);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub essential: bool,
    pub naics4: Vec<String>,
}

/// Maps 4-digit NAICS codes to categories. Every code maps to at most one category.
#[derive(Debug, Clone)]
pub struct CategoryTable {
    categories: Vec<Category>,
    by_naics: HashMap<String, CategoryId>,
}

#[derive(Serialize, Deserialize)]
struct CategoryFile {
    categories: Vec<Category>,
}

/// The built-in default: (name, essential, NAICS industry-group codes).
const DEFAULT_CATEGORIES: &[(&str, bool, &[&str])] = &[
    (
        "Health Care",
        true,
        &[
            "4461", "6211", "6212", "6213", "6214", "6215", "6216", "6219", "6221", "6222",
            "6223", "6231", "6233", "6244", "8121", "8122", "8129",
        ],
    ),
    (
        "Grocery Stores",
        true,
        &[
            "3118", "3399", "4239", "4242", "4246", "4249", "4431", "4451", "4452", "4483",
            "4512", "4522", "4523", "4531", "4532", "4533", "4539", "4543", "8114",
        ],
    ),
    ("Gasoline Stations", true, &["4471"]),
    ("Telecommunications Carriers", true, &["5173"]),
    (
        "Educational Service",
        true,
        &["5182", "5416", "5419", "6111", "6112", "6113", "6114", "6115", "6116"],
    ),
    ("Restaurants", false, &["3119", "7223", "7225"]),
    (
        "Financial Investment Service",
        false,
        &["5221", "5222", "5223", "5239", "5614"],
    ),
    (
        "Household and Real Estate",
        false,
        &[
            "3352", "4009", "4236", "4237", "4442", "4931", "5311", "5312", "5313", "5322",
            "5323", "5616", "8123",
        ],
    ),
    ("Clothing Stores", false, &["3159", "4481"]),
    (
        "Building Construction Service",
        false,
        &[
            "2361", "2381", "2382", "2383", "3271", "3272", "3323", "3325", "3328", "4233",
            "4441", "5324", "5617",
        ],
    ),
    (
        "Amusement and Recreation",
        false,
        &["4511", "7111", "7112", "7113", "7131", "7132", "7139", "5121", "5122"],
    ),
    (
        "Automotive Service",
        false,
        &[
            "3361", "4231", "4234", "4238", "4411", "4412", "4413", "4842", "4853", "5321",
            "7212", "8111", "8112",
        ],
    ),
    (
        "Public Administration",
        false,
        &[
            "2211", "3231", "4821", "4832", "4851", "4852", "4859", "4884", "5152", "5191",
            "5411", "5412", "5418", "5511", "5613", "5621", "5622", "5629", "6242", "8133",
            "9221", "9261",
        ],
    ),
    ("Insurance Service", false, &["5241", "5242"]),
    ("Shoe Stores", false, &["4482"]),
    ("Drinking Places", false, &["3121", "4453", "7224"]),
    ("Furniture Stores", false, &["4421", "4422"]),
    ("Museums and Historical Sites", false, &["7121"]),
    ("Traveler Accommodation", false, &["5615", "7211"]),
    ("Postal Services", false, &["4841", "4881", "4885", "4911", "4921"]),
];

fn is_naics4(code: &str) -> bool {
    code.len() == 4 && code.bytes().all(|b| b.is_ascii_digit())
}

impl CategoryTable {
    /// The 20 built-in categories.
    pub fn builtin() -> Self {
        let categories = DEFAULT_CATEGORIES
            .iter()
            .map(|(name, essential, codes)| Category {
                name: (*name).to_string(),
                essential: *essential,
                naics4: codes.iter().map(|c| (*c).to_string()).collect(),
            })
            .collect();
        Self::from_categories(categories).expect("built-in table is valid")
    }

    pub fn from_categories(categories: Vec<Category>) -> Result<Self> {
        let mut by_naics = HashMap::new();
        for (idx, cat) in categories.iter().enumerate() {
            if cat.name.trim().is_empty() {
                return Err(Error::Config("category with empty name".into()));
            }
            for code in &cat.naics4 {
                if !is_naics4(code) {
                    return Err(Error::Config(format!(
                        "category '{}': '{code}' is not a 4-digit NAICS code",
                        cat.name
                    )));
                }
                if let Some(prev) = by_naics.insert(code.clone(), CategoryId(idx as u8)) {
                    return Err(Error::Config(format!(
                        "NAICS code {code} mapped to both '{}' and '{}'",
                        categories[prev.0 as usize].name, cat.name
                    )));
                }
            }
        }
        Ok(Self { categories, by_naics })
    }

    /// Loads `{ "categories": [ { "name", "essential", "naics4": [...] } ] }`.
    pub fn from_json(reader: impl Read) -> Result<Self> {
        let file: CategoryFile = serde_json::from_reader(reader)
            .map_err(|e| Error::Config(format!("category table JSON: {e}")))?;
        Self::from_categories(file.categories)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "categories": self.categories })
    }

    pub fn lookup(&self, naics4: &str) -> Option<CategoryId> {
        self.by_naics.get(naics4).copied()
    }

    pub fn name(&self, id: CategoryId) -> &str {
        &self.categories[id.0 as usize].name
    }

    pub fn essential(&self, id: CategoryId) -> bool {
        self.categories[id.0 as usize].essential
    }

    pub fn id_by_name(&self, name: &str) -> Option<CategoryId> {
        self.categories
            .iter()
            .position(|c| c.name == name)
            .map(|i| CategoryId(i as u8))
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// First NAICS code listed for a category; handy for generated data.
    pub fn representative_naics(&self, id: CategoryId) -> &str {
        &self.categories[id.0 as usize].naics4[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_twenty_categories_five_essential() {
        let t = CategoryTable::builtin();
        assert_eq!(t.len(), 20);
        let essential: Vec<&str> = t
            .categories()
            .iter()
            .filter(|c| c.essential)
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(
            essential,
            vec![
                "Health Care",
                "Grocery Stores",
                "Gasoline Stations",
                "Telecommunications Carriers",
                "Educational Service"
            ]
        );
    }

    #[test]
    fn builtin_lookups() {
        let t = CategoryTable::builtin();
        let gas = t.lookup("4471").unwrap();
        assert_eq!(t.name(gas), "Gasoline Stations");
        assert!(t.essential(gas));
        let drink = t.lookup("7224").unwrap();
        assert_eq!(t.name(drink), "Drinking Places");
        assert!(!t.essential(drink));
        assert!(t.lookup("0000").is_none());
    }

    #[test]
    fn duplicate_code_rejected() {
        let cats = vec![
            Category {
                name: "A".into(),
                essential: true,
                naics4: vec!["1111".into()],
            },
            Category {
                name: "B".into(),
                essential: false,
                naics4: vec!["1111".into()],
            },
        ];
        assert!(CategoryTable::from_categories(cats).is_err());
    }

    #[test]
    fn bad_code_rejected() {
        let cats = vec![Category {
            name: "A".into(),
            essential: true,
            naics4: vec!["11x1".into()],
        }];
        assert!(CategoryTable::from_categories(cats).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = CategoryTable::builtin();
        let json = serde_json::to_string(&t.to_json()).unwrap();
        let t2 = CategoryTable::from_json(json.as_bytes()).unwrap();
        assert_eq!(t2.len(), 20);
        assert_eq!(t2.name(t2.lookup("6211").unwrap()), "Health Care");
    }
}
