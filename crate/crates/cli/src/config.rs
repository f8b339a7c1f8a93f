//! Flat `key = value` training configuration. The same key names are used
//! by the config file and by the command-line overrides.

use setmatch::trainer::{LossMode, OptimizerKind};
use setmatch::TrainConfig;

/// Every accepted key with its help text.
pub const KEYS: &[(&str, &str)] = &[
    ("steps", "optimizer steps"),
    ("batch_size", "scenes per step"),
    ("learning_rate", "optimizer learning rate"),
    ("optimizer", "sgd or adam"),
    ("loss_mode", "aligned or baseline"),
    ("seed", "root seed for the data, init and eval streams"),
    ("eval_every", "record a metrics row every this many steps"),
    ("clip_norm", "global gradient-norm clip, or `none`"),
    (
        "fixed_batch",
        "reuse the first batch at every step (true/false)",
    ),
    ("lambda_class", "class term weight"),
    ("lambda_l1", "L1 box term weight"),
    ("lambda_giou", "GIoU box term weight"),
    ("max_objects", "most objects per scene"),
    ("num_slots", "prediction slots"),
    ("num_classes", "object classes, background excluded"),
    ("feature_dim", "scene feature length"),
    ("hidden_width", "trunk width"),
    ("box_min", "smallest box side"),
    ("box_max", "largest box side"),
];

/// One setting and where it came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub origin: String,
}

/// Splits a config file into settings. Blank lines and lines starting with
/// `#` are skipped; a trailing `# ...` after a value is a comment too.
pub fn parse_config_text(text: &str, path: &str) -> Result<Vec<Setting>, String> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = format!("{path}:{}", k + 1);
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("{origin}: expected `key = value`, got `{line}`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(format!("{origin}: expected `key = value`, got `{line}`"));
        }
        out.push(Setting {
            key: key.to_string(),
            value: value.to_string(),
            origin,
        });
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(s: &Setting, what: &str) -> Result<T, String> {
    s.value.parse().map_err(|_| {
        format!(
            "{}: `{}` must be {what}, got `{}`",
            s.origin, s.key, s.value
        )
    })
}

/// Applies one setting; unknown keys and unparsable values are errors that
/// name the key.
pub fn apply(cfg: &mut TrainConfig, s: &Setting) -> Result<(), String> {
    const INT: &str = "a non-negative integer";
    const REAL: &str = "a number";
    match s.key.as_str() {
        "steps" => cfg.steps = parse(s, INT)?,
        "batch_size" => cfg.batch_size = parse(s, INT)?,
        "learning_rate" => cfg.learning_rate = parse(s, REAL)?,
        "optimizer" => {
            cfg.optimizer = match s.value.as_str() {
                "sgd" => OptimizerKind::Sgd,
                "adam" => OptimizerKind::Adam,
                _ => {
                    return Err(format!(
                        "{}: `optimizer` must be sgd or adam, got `{}`",
                        s.origin, s.value
                    ))
                }
            }
        }
        "loss_mode" => {
            cfg.loss_mode = match s.value.as_str() {
                "aligned" => LossMode::Aligned,
                "baseline" => LossMode::Baseline,
                _ => {
                    return Err(format!(
                        "{}: `loss_mode` must be aligned or baseline, got `{}`",
                        s.origin, s.value
                    ))
                }
            }
        }
        "seed" => cfg.seed = parse(s, INT)?,
        "eval_every" => cfg.eval_every = parse(s, INT)?,
        "clip_norm" => {
            cfg.clip_norm = match s.value.as_str() {
                "none" | "off" => None,
                _ => Some(parse(s, "a number or `none`")?),
            }
        }
        "fixed_batch" => cfg.fixed_batch = parse(s, "true or false")?,
        "lambda_class" => cfg.loss.lambda_class = parse(s, REAL)?,
        "lambda_l1" => cfg.loss.lambda_l1 = parse(s, REAL)?,
        "lambda_giou" => cfg.loss.lambda_giou = parse(s, REAL)?,
        "max_objects" => cfg.scene.max_objects = parse(s, INT)?,
        "num_slots" => cfg.scene.num_slots = parse(s, INT)?,
        "num_classes" => cfg.scene.num_classes = parse(s, INT)?,
        "feature_dim" => cfg.scene.feature_dim = parse(s, INT)?,
        "hidden_width" => cfg.scene.hidden_width = parse(s, INT)?,
        "box_min" => cfg.scene.box_min = parse(s, REAL)?,
        "box_max" => cfg.scene.box_max = parse(s, REAL)?,
        _ => return Err(format!("{}: unknown key `{}`", s.origin, s.key)),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(text: &str) -> Vec<Setting> {
        parse_config_text(text, "cfg").unwrap()
    }

    #[test]
    fn comments_and_blank_lines() {
        let s = settings("# header\n\nsteps = 10 # trailing\n  seed=3\n");
        assert_eq!(s.len(), 2);
        assert_eq!(
            (s[0].key.as_str(), s[0].value.as_str(), s[0].origin.as_str()),
            ("steps", "10", "cfg:3")
        );
        assert_eq!((s[1].key.as_str(), s[1].value.as_str()), ("seed", "3"));
    }

    #[test]
    fn every_key_is_accepted() {
        let values = [
            "5", "2", "0.01", "sgd", "baseline", "9", "2", "none", "true", "1", "5", "2", "3", "6",
            "3", "40", "16", "0.1", "0.3",
        ];
        let mut cfg = TrainConfig::default();
        for ((k, _), v) in KEYS.iter().zip(values) {
            apply(&mut cfg, &settings(&format!("{k} = {v}"))[0]).unwrap();
        }
        assert_eq!(cfg.steps, 5);
        assert_eq!(cfg.loss_mode, LossMode::Baseline);
        assert_eq!(cfg.optimizer, OptimizerKind::Sgd);
        assert_eq!(cfg.clip_norm, None);
        assert!(cfg.fixed_batch);
        assert_eq!(cfg.scene.hidden_width, 16);
        assert_eq!(cfg.scene.box_max, 0.3);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = apply(&mut TrainConfig::default(), &settings("stepz = 4")[0]).unwrap_err();
        assert!(err.contains("unknown key `stepz`"), "{err}");
        assert!(err.starts_with("cfg:1"), "{err}");
    }

    #[test]
    fn bad_values_name_the_key() {
        for line in [
            "steps = -1",
            "learning_rate = fast",
            "optimizer = rmsprop",
            "fixed_batch = 1",
        ] {
            let err = apply(&mut TrainConfig::default(), &settings(line)[0]).unwrap_err();
            let key = line.split(' ').next().unwrap();
            assert!(err.contains(&format!("`{key}`")), "{err}");
        }
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_config_text("steps 10", "f")
            .unwrap_err()
            .contains("f:1"));
        assert!(parse_config_text("x=1\n= 3", "f")
            .unwrap_err()
            .contains("f:2"));
        assert!(parse_config_text("steps =", "f").is_err());
    }
}
