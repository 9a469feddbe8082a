"""Regenerate the JSON report schemas under schemas/."""
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "schemas"
DRAFT = "http://json-schema.org/draft-07/schema#"

num = {"type": "number"}
opt_num = {"type": ["number", "null"]}
int_ = {"type": "integer", "minimum": 0}
string = {"type": "string"}
months = {"type": "string", "pattern": "^[A-Z]{3}$"}


def obj(props, required=None, extra=False):
    return {
        "type": "object",
        "properties": props,
        "required": sorted(required if required is not None else props),
        "additionalProperties": extra,
    }


manifest = obj(
    {
        "command": {"enum": ["summary", "train", "evaluate", "explain"]},
        "tool_version": string,
        "dataset": obj(
            {
                "path": string,
                "fingerprint": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                "records": int_,
                "label_column": string,
                "impute": {"enum": ["column-mean", "zero"]},
            }
        ),
        "seeds": obj({"split": {"type": ["integer", "null"]}, "explainer": {"type": ["integer", "null"]}}),
        "train_fraction": opt_num,
        "hyperparameters": {"type": ["object", "array", "null"]},
        "explainer": {"type": ["object", "null"]},
        "models": {
            "type": "array",
            "items": obj(
                {
                    "path": string,
                    "kind": {"enum": ["logistic", "knn", "tree", "svm"]},
                    "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                }
            ),
        },
        "timestamps": obj({"started": {"type": "string", "format": "date-time"}, "finished": {"type": "string", "format": "date-time"}}),
    }
)

matrix = obj({"tp": int_, "fp": int_, "tn": int_, "fn": int_})
metrics = obj(
    {
        "model": string,
        "partition": {"enum": ["test", "train"]},
        "accuracy": opt_num,
        "precision": opt_num,
        "recall": opt_num,
        "f1": opt_num,
        "matrix": matrix,
    }
)
importance = obj({"feature": months, "importance": {"type": "number", "minimum": 0}, "mean_phi": num})
attribution = obj({"feature": months, "value": num, "phi": num})
condition = obj(
    {
        "feature_index": int_,
        "feature": months,
        "condition": string,
        "value": num,
        "bin": int_,
        "lower": opt_num,
        "upper": opt_num,
        "weight": num,
    }
)
agreement = obj(
    {
        "top_k": int_,
        "shap_top": {"type": "array", "items": months},
        "lime_features": {"type": "array", "items": months},
        "shared": {"type": "array", "items": months},
        "overlap": {"type": "number", "minimum": 0, "maximum": 1},
        "sign_agreement": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "features": {
            "type": "array",
            "items": obj(
                {
                    "feature": months,
                    "lime_weight": num,
                    "in_shap_top": {"type": "boolean"},
                    "shap_phi": opt_num,
                    "sign_agrees": {"type": ["boolean", "null"]},
                }
            ),
        },
    }
)
defs = {
    "manifest": manifest,
    "metrics": metrics,
    "importance": importance,
    "attribution": attribution,
    "condition": condition,
    "agreement": agreement,
}


def ref(name):
    return {"$ref": f"#/definitions/{name}"}


def report(name, title, kind, body, mode=None):
    props = {
        "schema_version": {"const": 1},
        "report": {"const": kind},
        "manifest": ref("manifest"),
    }
    if mode:
        props["mode"] = {"const": mode}
    props.update(body)
    schema = {"$schema": DRAFT, "title": title}
    schema.update(obj(props))
    schema["definitions"] = defs
    (OUT / f"{name}.schema.json").write_text(json.dumps(schema, indent=2) + "\n")


arr = lambda item: {"type": "array", "items": item}
report(
    "summary",
    "Dataset summary report",
    "summary",
    {
        "records": int_,
        "first_year": {"type": "integer"},
        "last_year": {"type": "integer"},
        "floods": int_,
        "no_floods": int_,
        "missing_cells": int_,
        "imputed": arr(obj({"year": {"type": "integer"}, "month": months, "value": num, "strategy": {"enum": ["column-mean", "zero"]}})),
        "annual_mismatches": arr({"type": "integer"}),
        "monthly_means": {"type": "array", "minItems": 12, "maxItems": 12, "items": obj({"month": months, "mean_mm": num})},
    },
)
report(
    "train",
    "Training report",
    "train",
    {
        "model_path": string,
        "kind": {"enum": ["logistic", "knn", "tree", "svm"]},
        "n_train": int_,
        "n_test": int_,
        "train_metrics": ref("metrics"),
    },
)
report(
    "evaluate",
    "Model comparison report",
    "evaluate",
    {"partition": {"enum": ["test", "train"]}, "n_rows": int_, "results": {"type": "array", "minItems": 1, "items": ref("metrics")}},
)
report(
    "explain-global-shap",
    "Global SHAP importance report",
    "explain",
    {
        "rows": int_,
        "ranking": arr(months),
        "features": arr(ref("importance")),
        "max_abs_residual": {"type": "number", "minimum": 0},
    },
    mode="global-shap",
)
report(
    "explain-local-shap",
    "Local SHAP report",
    "explain",
    {
        "year": {"type": "integer"},
        "observed_flood": {"enum": [0, 1]},
        "predicted_class": {"enum": [0, 1]},
        "base_value": num,
        "model_output": num,
        "additivity_residual": num,
        "coalitions": int_,
        "features": arr(ref("attribution")),
    },
    mode="local-shap",
)
report(
    "explain-local-lime",
    "Local LIME report",
    "explain",
    {
        "year": {"type": "integer"},
        "observed_flood": {"enum": [0, 1]},
        "predicted_class": {"enum": [0, 1]},
        "probability": {"type": "number", "minimum": 0, "maximum": 1},
        "intercept": num,
        "local_fidelity": num,
        "n_samples": int_,
        "conditions": arr(ref("condition")),
    },
    mode="local-lime",
)
report(
    "explain-compare",
    "SHAP and LIME agreement report",
    "explain",
    {
        "year": {"type": "integer"},
        "agreement": ref("agreement"),
        "global": arr(ref("importance")),
        "lime": arr(ref("condition")),
        "local_shap": arr(ref("attribution")),
    },
    mode="compare",
)
