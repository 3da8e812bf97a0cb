import pytest

from pseudoperiodic.config import PipelineConfig, parse_config
from pseudoperiodic.errors import ContractError, ParseError


def test_defaults():
    cfg = PipelineConfig()
    assert (cfg.epsilon, cfg.lam, cfg.eta, cfg.xi, cfg.cv_folds) == (1, 10, 0.4, 0.8, 10)
    assert (cfg.u0, cfg.alpha) == (50, 1.1)
    assert list(cfg.k_range) == list(range(2, 9))


def test_parse_with_comments():
    cfg = parse_config("# run settings\nepsilon = 0.5\n\nlambda=20\nclassifier = gnb\nstandardize = no\n")
    assert cfg.epsilon == 0.5 and cfg.lam == 20 and cfg.classifier == "gnb" and cfg.standardize is False


def test_text_round_trip():
    cfg = PipelineConfig(epsilon=0.7, seed=4, baseline="angle", standardize=False)
    assert parse_config(cfg.to_text()) == cfg
    assert parse_config(cfg.to_text()).digest() == cfg.digest()
    assert PipelineConfig().digest() != cfg.digest()


@pytest.mark.parametrize(
    "text",
    ["epsilon 1", "foo = 1", "epsilon = x", "epsilon = 1\nepsilon = 2", "standardize = maybe"],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_config(text)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(epsilon=0),
        dict(epsilon=4),
        dict(lam=-1),
        dict(k_min=1),
        dict(k_min=5, k_max=4),
        dict(classifier="svm"),
        dict(baseline="wave"),
        dict(cv_folds=1),
        dict(t_scale=0),
    ],
)
def test_out_of_range(kwargs):
    with pytest.raises(ContractError):
        PipelineConfig(**kwargs)


def test_overrides_skip_none():
    cfg = PipelineConfig().with_overrides(epsilon=0.5, lam=None)
    assert cfg.epsilon == 0.5 and cfg.lam == 10
