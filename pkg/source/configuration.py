import os
import yaml
import logging

from source.errors import ConfigError

DEFAULT_CONFIG_PATH = "./config/config.yml"
SEED_ENV_VAR = "CAUSAL_ECONF_SEED"
LOG_FORMAT = '%(asctime)s - %(filename)s->%(funcName)s():%(lineno)s - %(levelname)s - %(message)s'


def setup_logging(debug=False):
    level = logging.DEBUG if debug else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


class ModelSection:
    required_keys = ["path"]
    def __init__(self, data):
        for key in self.required_keys:
            if key not in data or data[key] is None:
                raise ConfigError(f"[FATAL] Load config fail. Was expecting the key model.{key}")
        self.path = data["path"]
        # Index or label of the category X is set to
        self.intervention = data.get("intervention", 0)


class DatasetSection:
    def __init__(self, data):
        # Optional CSV with header x,y,z. Without it, datasets are sampled from the model.
        self.path = data.get("path")


class RunSection:
    def __init__(self, data):
        alternative = data.get("alternative", "uniform")
        if isinstance(alternative, list) and alternative and all(isinstance(v, (int, float)) for v in alternative):
            # A bare list of numbers is one explicit vector, not several alternatives
            alternative = [alternative]
        self.alternatives = _as_list(alternative)
        self.n = data.get("n", 50)
        self.c = data.get("c", 1)
        self.trials = data.get("trials", 100_000)
        self.seed = data.get("seed")
        if self.seed is None:
            env_seed = os.environ.get(SEED_ENV_VAR)
            if env_seed is not None:
                try:
                    self.seed = int(env_seed)
                except ValueError:
                    raise ConfigError(f"[FATAL] {SEED_ENV_VAR} must be an integer, got {env_seed!r}")
                logging.debug(f"Seed {self.seed} taken from {SEED_ENV_VAR}")
            else:
                self.seed = 0
        self.alphas = _as_list(data.get("alpha", 10))
        self.strategies = _as_list(data.get("strategy", "copy-z"))
        self.strict_past = data.get("strict_past", False)
        self.y = data.get("y", 0)
        self.z = data.get("z", 0)
        self.c_list = _as_list(data.get("c_list", [0.25, 0.5, 1]))
        self.mode = data.get("mode", "auto")
        self.sigma = data.get("sigma", 4.0)
        self.budget = data.get("budget", 10 ** 7)


class OutputSection:
    def __init__(self, data):
        self.directory = data.get("directory", "./reports/")
        self.formats = _as_list(data.get("formats", ["json", "csv"]))


class Config:
    required_keys = ["model"]
    def __init__(self, data):
        for key in self.required_keys:
            if key not in data:
                raise ConfigError(f"[FATAL] Load config fail. Was expecting the key {key}")

        self.debug = data.get("debug", False)
        self.model = ModelSection(data["model"] or {})
        self.dataset = DatasetSection(data.get("dataset") or {})
        self.run = RunSection(data.get("run") or {})
        self.output = OutputSection(data.get("output") or {})


def _merge(base, overrides):
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict):
            merged[key] = _merge(merged.get(key) or {}, value)
        elif value is not None:
            merged[key] = value
    return merged


def load_config(path=None, overrides=None):
    """
    Load a YAML (or JSON) run configuration and apply overrides on top of it.
    Overrides are nested dicts shaped like the file; None values are ignored so unset flags never win.
    Without an explicit path, ./config/config.yml is used when it exists.
    """
    raw_conf = {}
    if path is None and os.path.exists(DEFAULT_CONFIG_PATH):
        path = DEFAULT_CONFIG_PATH
    if path is not None:
        with open(path, encoding='utf-8') as config_yml:
            try:
                raw_conf = yaml.safe_load(config_yml) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"[FATAL] Error while reading config file {path}: {exc}")
        if not isinstance(raw_conf, dict):
            raise ConfigError(f"[FATAL] Config file {path} must contain a mapping, got {type(raw_conf).__name__}")
        logging.debug(f"Configuration loaded from {path}")
    return Config(_merge(raw_conf, overrides or {}))
