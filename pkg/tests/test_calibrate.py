from fractions import Fraction

import pytest

from edgedns.bench import run_all
from edgedns.calibrate import FRESH, SHARED, calibrate, fit_edge, misses, read_targets
from edgedns.errors import ConfigError, Infeasible

from conftest import REPO

TABLE = (REPO / "src" / "edgedns" / "data" / "table1.csv").read_text()


def test_table_values():
    rows = {r.scenario: r for r in read_targets(TABLE)}
    assert rows["edge"].means == {10: Fraction("35.20"), 100: Fraction("17.60"), 1000: Fraction("17.27"),
                                  10000: Fraction("17.26")}
    assert rows["google"].means[10000] == Fraction("20.12")
    assert rows["verisign"].resolver == "64.6.64.6"


def test_read_targets_errors():
    with pytest.raises(ConfigError):
        read_targets("")
    with pytest.raises(ConfigError):
        read_targets("name,resolver,10\n")
    with pytest.raises(ConfigError) as info:
        read_targets("scenario,resolver,10,100\nx,1.2.3.4,abc,5\ny,1.2.3.4,-1,\n")
    assert sorted({p[0] for p in info.value.problems}) == [2, 3]


def test_misses_models():
    assert misses(10, (10, 100, 1000), FRESH) == [10, 10, 10]
    assert misses(10, (10, 100, 1000), SHARED) == [10, 0, 0]
    assert misses(12, (10, 100, 1000), SHARED) == [10, 2, 0]


def test_fit_edge_recovers_known_parameters():
    # W = 5, R = 20, 4 domains, fresh cache: only D * R is identifiable
    means = {c: Fraction(5) + Fraction(20 * min(4, c), c) for c in (10, 100, 1000)}
    fit = fit_edge(means)
    assert (fit.model, fit.warm, fit.domains * fit.penalty, fit.max_error) == (FRESH, 5, 80, 0)
    # a count below D pins D down
    means = {c: Fraction(5) + Fraction(20 * min(4, c), c) for c in (2, 100, 1000)}
    fit = fit_edge(means)
    assert (fit.domains, fit.warm, fit.penalty, fit.max_error) == (4, 5, 20, 0)


def test_fit_edge_respects_warm_floor():
    fit = fit_edge({10: Fraction(30), 40: Fraction(12), 200: Fraction(8)}, min_warm=4)
    assert fit.warm >= 4


def test_fit_edge_rising_targets_infeasible():
    with pytest.raises(Infeasible):
        fit_edge({10: Fraction(10), 100: Fraction(20)})


def test_identical_targets_degenerate_to_flat():
    fit = fit_edge({10: Fraction(7), 100: Fraction(7)})
    assert fit.penalty == 0 and fit.warm == 7 and fit.max_error == 0


def test_remote_only_calibration_is_exact():
    targets = read_targets("scenario,resolver,10,100\ngoogle,8.8.8.8,30.5,30.5\n")
    result = calibrate(targets)
    stats, _ = run_all(result.config.scenarios, result.config.counts)
    assert {s.mean_ms for s in stats} == {Fraction("30.5")}


def test_target_below_fixed_path_infeasible():
    with pytest.raises(Infeasible):
        calibrate(read_targets("scenario,resolver,10\ng,8.8.8.8,3\n"))
    with pytest.raises(Infeasible):
        calibrate(read_targets("scenario,resolver,10\nedge,edge,3\n"))


def test_two_edge_rows_infeasible():
    with pytest.raises(Infeasible):
        calibrate(read_targets("scenario,resolver,10\na,edge,30\nb,edge,20\n"))


def test_prediction_matches_simulation_on_small_series():
    targets = read_targets("scenario,resolver,10,40,200\nedge,edge,30,12,8\ngoogle,8.8.8.8,21,21,21\n")
    result = calibrate(targets)
    stats, _ = run_all(result.config.scenarios, result.config.counts)
    for st in stats:
        assert abs(st.mean_ms - result.predicted[(st.scenario, st.query_count)]) < Fraction(1, 10**5)
