from source.configuration import logging
from source.experiments import MIN_TRIALS
from source.sampling import UINT64_LIMIT


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def check_model_configuration(conf):
    # Model file
    assert isinstance(conf.model.path, str), "[FATAL] Invalid model.path. The model path must be a string. Please check the configuration."
    assert conf.model.path != '', "[FATAL] Invalid model.path. The model path cannot be empty. Please check the configuration."

    # Intervention
    assert isinstance(conf.model.intervention, str) or _is_int(conf.model.intervention), f"[FATAL] Invalid model.intervention. The intervention must be a label or an index. Got {conf.model.intervention!r}."


def check_dataset_configuration(conf):
    if conf.dataset.path is not None:
        assert isinstance(conf.dataset.path, str), "[FATAL] Invalid dataset.path. The dataset path must be a string. Please check the configuration."
        assert conf.dataset.path != '', "[FATAL] Invalid dataset.path. The dataset path cannot be empty. Please check the configuration."


def check_run_configuration(conf):
    run = conf.run

    # Sample size
    assert _is_int(run.n), f"[FATAL] Invalid run.n. The sample size must be an integer. Got {run.n!r}."
    assert run.n >= 0, f"[FATAL] Invalid run.n. The sample size must be >= 0. Got {run.n}."

    # Regularization
    assert _is_number(run.c), f"[FATAL] Invalid run.c. The regularization constant must be a number. Got {run.c!r}."
    assert run.c > 0, f"[FATAL] Invalid run.c. The regularization constant must be > 0. Got {run.c}."
    assert len(run.c_list) > 0, "[FATAL] Invalid run.c_list. The sweep needs at least one constant."
    for c in run.c_list:
        assert _is_number(c) and c > 0, f"[FATAL] Invalid run.c_list. Every constant must be a number > 0. Got {c!r}."

    # Trials
    assert _is_int(run.trials), f"[FATAL] Invalid run.trials. The number of trials must be an integer. Got {run.trials!r}."
    assert run.trials >= MIN_TRIALS, f"[FATAL] Invalid run.trials. At least {MIN_TRIALS} trials are needed for a pass/fail claim. Got {run.trials}."

    # Seed
    assert _is_int(run.seed), f"[FATAL] Invalid run.seed. The seed must be an integer. Got {run.seed!r}."
    assert 0 <= run.seed < UINT64_LIMIT, f"[FATAL] Invalid run.seed. The seed must be an unsigned 64-bit integer. Got {run.seed}."

    # Significance levels
    assert len(run.alphas) > 0, "[FATAL] Invalid run.alpha. At least one level is required."
    for alpha in run.alphas:
        assert _is_number(alpha) and alpha > 0, f"[FATAL] Invalid run.alpha. Every level must be a number > 0. Got {alpha!r}."

    # Alternatives and strategies
    for alternative in run.alternatives:
        assert isinstance(alternative, (str, list)), f"[FATAL] Invalid run.alternative. Expected uniform, point:<label> or a vector. Got {alternative!r}."
    for strategy in run.strategies:
        assert isinstance(strategy, str), f"[FATAL] Invalid run.strategy. The strategy must be a name. Got {strategy!r}."
    assert isinstance(run.strict_past, bool), "[FATAL] Invalid run.strict_past. The strict_past flag must be a boolean. Please check the configuration."

    # Labels for single-label checks
    for key in ("y", "z"):
        value = getattr(run, key)
        assert isinstance(value, str) or _is_int(value), f"[FATAL] Invalid run.{key}. Expected a label or an index. Got {value!r}."

    assert run.mode in ("auto", "exact", "mc"), f"[FATAL] Invalid run.mode. The mode must be 'auto', 'exact' or 'mc'. Got {run.mode!r}."
    assert _is_number(run.sigma) and run.sigma > 0, f"[FATAL] Invalid run.sigma. The pass threshold must be a number > 0. Got {run.sigma!r}."
    assert _is_int(run.budget) and run.budget > 0, f"[FATAL] Invalid run.budget. The enumeration budget must be a positive integer. Got {run.budget!r}."


def check_output_configuration(conf):
    # Output directory
    assert isinstance(conf.output.directory, str), "[FATAL] Invalid output.directory. The output directory must be a string. Please check the configuration."
    assert conf.output.directory != '', "[FATAL] Invalid output.directory. The output directory cannot be empty. Please check the configuration."

    # Formats
    for output_format in conf.output.formats:
        assert output_format in ("json", "csv"), f"[FATAL] Invalid output.formats. Supported formats are 'json' and 'csv'. Got {output_format!r}."


def check_configuration(conf):
    """
    Check if the configuration is valid.
    The goal is to ensure all values fetched from the configuration file and flags are valid
    before any file is read or any experiment starts.
    """
    check_model_configuration(conf)
    check_dataset_configuration(conf)
    check_run_configuration(conf)
    check_output_configuration(conf)
    logging.debug("Configuration check passed.")
