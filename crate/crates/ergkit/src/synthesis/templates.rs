//! Prompt templates, shipped as editable text assets. The embedded copies
//! are the defaults; a directory of same-named `.txt` files overrides them
//! at load time.

use std::collections::BTreeMap;
use std::path::Path;

macro_rules! embedded {
    ($($name:literal),+ $(,)?) => {
        [$(($name, include_str!(concat!("../../templates/", $name, ".txt")))),+]
    };
}

const EMBEDDED: [(&str, &str); 9] = embedded![
    "generating_constraints",
    "verifying_constraints",
    "aggregating_constraints",
    "adversarial_constraints",
    "erg_cot",
    "thinking_reward",
    "rubric_eval",
    "sim_user",
    "sim_assistant",
];

/// The active template set.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    overrides: BTreeMap<String, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            overrides: BTreeMap::new(),
        }
    }
}

impl TemplateSet {
    pub fn embedded() -> Self {
        TemplateSet::default()
    }

    /// Loads `<name>.txt` overrides from a directory on top of the embedded
    /// defaults. Unknown files are ignored.
    pub fn with_overrides_from(dir: &Path) -> std::io::Result<Self> {
        let mut overrides = BTreeMap::new();
        for (name, _) in EMBEDDED {
            let path = dir.join(format!("{name}.txt"));
            if path.is_file() {
                overrides.insert(name.to_string(), std::fs::read_to_string(path)?);
            }
        }
        Ok(TemplateSet { overrides })
    }

    pub fn get(&self, name: &str) -> &str {
        if let Some(text) = self.overrides.get(name) {
            return text;
        }
        EMBEDDED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| *text)
            .unwrap_or_else(|| panic!("unknown template {name:?}"))
    }

    /// Fills `{placeholder}` slots.
    pub fn render(&self, name: &str, slots: &[(&str, &str)]) -> String {
        let mut text = self.get(name).to_string();
        for (key, value) in slots {
            text = text.replace(&format!("{{{key}}}"), value);
        }
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_templates_resolve() {
        let t = TemplateSet::embedded();
        assert!(t.get("verifying_constraints").contains("output `Yes` or `No`"));
        assert!(t.get("aggregating_constraints").contains("selected_idx"));
        assert!(t
            .get("thinking_reward")
            .contains("Logicality of the thought process"));
        assert!(t.get("rubric_eval").contains("[List of Assessment Points]"));
    }

    #[test]
    fn placeholder_rendering() {
        let t = TemplateSet::embedded();
        let text = t.render("aggregating_constraints", &[("select_num", "3")]);
        assert!(text.contains("at most 3 instructions"));
    }

    #[test]
    fn directory_overrides_win() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("sim_user.txt"), "custom prompt").unwrap();
        let t = TemplateSet::with_overrides_from(dir.path()).unwrap();
        assert_eq!(t.get("sim_user"), "custom prompt");
        assert!(t.get("sim_assistant").contains("write the assistant reply"));
    }
}
