use std::path::Path;

use super::{ModelError, System, SystemDoc};

struct Entry {
    name: &'static str,
    f: &'static [&'static str],
    h: &'static [&'static str],
}

const LTI_F: &[&str] = &["-2*x1 + x2", "x1 - 2*x2"];

const CATALOG: &[Entry] = &[
    Entry {
        name: "lti-remark1",
        f: LTI_F,
        h: &["x1"],
    },
    Entry {
        name: "lti-remark1-badout",
        f: LTI_F,
        h: &["exp(2*t)*x1"],
    },
    Entry {
        name: "ex1-timevarying",
        f: &[
            "-0.1*x1^3 - (4 + sin(t) + 0.3*x1^2)*x2 + sin(x1 + x2) + cos(t)",
            "-0.1*x2^3 - (4 + sin(t) + 0.3*x2^2)*x1 + cos(x1 + x2) + sin(t)",
        ],
        h: &["x1 + x2"],
    },
    Entry {
        name: "ex2-timeinvariant",
        f: &["-3*x2 - sin(x1 + x2)", "-3*x1 + cos(x1 + x2)"],
        h: &["x1 + x2"],
    },
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|e| e.name)
}

pub fn builtin_doc(name: &str) -> Option<SystemDoc> {
    CATALOG.iter().find(|e| e.name == name).map(|e| SystemDoc {
        name: e.name.to_string(),
        n: e.f.len(),
        m: e.h.len(),
        f: e.f.iter().map(|s| s.to_string()).collect(),
        h: e.h.iter().map(|s| s.to_string()).collect(),
    })
}

/// Validated built-in system by name.
pub fn builtin(name: &str) -> Result<System, ModelError> {
    builtin_doc(name)
        .ok_or_else(|| ModelError::UnknownSystem(name.to_string()))?
        .build()
}

/// Resolve a built-in name or a path to a JSON system document.
pub fn load_system(path_or_name: &str) -> Result<System, ModelError> {
    if let Some(doc) = builtin_doc(path_or_name) {
        return doc.build();
    }
    let path = Path::new(path_or_name);
    if !path.exists() {
        return Err(ModelError::UnknownSystem(path_or_name.to_string()));
    }
    SystemDoc::from_json(&std::fs::read_to_string(path)?)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for name in builtin_names() {
            let sys = builtin(name).unwrap();
            assert_eq!(sys.name(), name);
        }
        assert!(matches!(builtin("nope"), Err(ModelError::UnknownSystem(_))));
    }

    #[test]
    fn load_from_file() {
        let dir = std::env::temp_dir().join(format!("occ-load-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.json");
        std::fs::write(&good, r#"{"name": "decay", "n": 1, "m": 1, "f": ["-x1"], "h": ["x1"]}"#).unwrap();
        let sys = load_system(good.to_str().unwrap()).unwrap();
        assert_eq!(sys.name(), "decay");

        let bad = dir.join("bad.json");
        std::fs::write(&bad, r#"{"name": "b", "n": 2, "m": 1, "f": ["x3", "x1"], "h": ["x1"]}"#).unwrap();
        assert!(matches!(load_system(bad.to_str().unwrap()), Err(ModelError::UnknownVariable { .. })));

        let junk = dir.join("junk.json");
        std::fs::write(&junk, "{not json").unwrap();
        assert!(matches!(load_system(junk.to_str().unwrap()), Err(ModelError::Json(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}
