//! Deterministic report emission: one structured record per command, with a
//! plain-text rendering. Keys are sorted maps throughout, so identical
//! inputs give byte-identical output.

use std::collections::BTreeMap;

pub struct Report {
    command: String,
    scalars: BTreeMap<String, serde_json::Value>,
    tables: BTreeMap<String, Vec<(String, serde_json::Value)>>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            scalars: BTreeMap::new(),
            tables: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: serde_json::Value) {
        self.scalars.insert(key.to_string(), value);
    }

    pub fn table_row(&mut self, table: &str, key: &str, value: serde_json::Value) {
        self.tables
            .entry(table.to_string())
            .or_default()
            .push((key.to_string(), value));
    }

    pub fn emit(&self, structured: bool) {
        if structured {
            let mut root = serde_json::Map::new();
            root.insert(
                "command".into(),
                serde_json::Value::String(self.command.clone()),
            );
            for (k, v) in &self.scalars {
                root.insert(k.clone(), v.clone());
            }
            for (name, rows) in &self.tables {
                let mut table = serde_json::Map::new();
                for (k, v) in rows {
                    table.insert(k.clone(), v.clone());
                }
                root.insert(name.clone(), serde_json::Value::Object(table));
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::Value::Object(root))
                    .expect("report serializes")
            );
        } else {
            println!("# {}", self.command);
            for (k, v) in &self.scalars {
                println!("{k}: {v}");
            }
            for (name, rows) in &self.tables {
                println!("[{name}]");
                for (k, v) in rows {
                    println!("  {k}: {v}");
                }
            }
        }
    }
}
