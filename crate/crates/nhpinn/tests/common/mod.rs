//! Small configs that exercise every stage in seconds.

#![allow(dead_code)]

pub fn tiny_slow1d() -> String {
    r#"{
        "experiment": "slow1d",
        "cell": {"train": {"hidden": [8, 8], "epochs": 30, "window": 5}, "grid": 17, "eval_grid": 16, "reference_grid": 64, "quadrature": 32},
        "slow_field": {"nodes": 5, "warm_epochs": 5},
        "homogenized": {"train": {"hidden": [8, 8], "epochs": 40, "window": 10}, "grid": 21},
        "baseline": {"train": {"hidden": [8, 8], "epochs": 20, "window": 5}, "grid": 21},
        "transfer": {"train": {"hidden": [8, 8], "epochs": 20, "window": 5}, "grid": 21},
        "reference": {"fine_nodes": 401, "eval_nodes": 101}
    }"#
    .to_string()
}

pub fn tiny_elliptic2d() -> String {
    r#"{
        "experiment": "elliptic2d",
        "cell": {"train": {"hidden": [8, 8], "epochs": 20, "window": 5}, "grid": 9, "eval_grid": 16, "reference_grid": 32, "quadrature": 16},
        "homogenized": {"train": {"hidden": [8, 8], "epochs": 20, "window": 5}, "grid": 7},
        "baseline": {"train": {"hidden": [8, 8], "epochs": 10, "window": 5}, "grid": 7},
        "transfer": {"train": {"hidden": [8, 8], "epochs": 10, "window": 5}, "grid": 7},
        "reference": {"fine_nodes": 41, "eval_nodes": 11}
    }"#
    .to_string()
}

pub fn tiny_dr() -> String {
    r#"{
        "experiment": "dr",
        "epsilon": 0.1,
        "cell": {"train": {"hidden": [8, 8], "epochs": 30, "window": 5}, "grid": 17, "eval_grid": 16, "reference_grid": 64, "quadrature": 32},
        "homogenized": {"train": {"hidden": [8, 8], "epochs": 20, "window": 5}, "grid": 11, "time_grid": 5},
        "baseline": {"train": {"hidden": [8, 8], "epochs": 10, "window": 5}, "grid": 11, "time_grid": 5},
        "transfer": {"train": {"hidden": [8, 8], "epochs": 10, "window": 5}, "grid": 11, "time_grid": 5},
        "reference": {"fine_nodes": 201, "eval_nodes": 51, "time_step": 0.01}
    }"#
    .to_string()
}
