"""Tests for CSV ingestion and result serialization."""
import json

import numpy as np
import pytest

from curekit.bandwidths import BandwidthSpec
from curekit.control import ControlParams
from curekit.emit import emit_results, render_csv, render_json, render_text, to_frame
from curekit.errors import EmptyAfterFiltering, MissingColumn, ParseError, UsageError
from curekit.hyptests import testcov, testmz
from curekit.ingest import ingest_csv
from curekit.mixture_cure import latency, probcure
from curekit.simulation import simulate_model
from curekit.survival_data import SurvivalSample, km_cure_by_strata


class TestIngest:
    def test_reads_selected_columns(self, write_csv):
        path = write_csv("id,age,time,status", ["1,30,2.5,1", "2,41,3.0,0", "3,25,0,1"])
        sample = ingest_csv(path, "age", "time", "status")
        assert sample.x.tolist() == [30.0, 41.0, 25.0]
        assert sample.t.tolist() == [2.5, 3.0, 0.0]
        assert sample.d.tolist() == [1, 0, 1]
        assert not sample.categorical

    def test_drops_incomplete_rows(self, write_csv, caplog):
        path = write_csv("x,t,d", ["1,2,1", "NA,3,0", "2,,1", "3,4,0"])
        with caplog.at_level("WARNING"):
            sample = ingest_csv(path, "x", "t", "d")
        assert sample.n == 2
        assert "Dropped 2 row(s)" in caplog.text

    def test_text_covariate_is_categorical(self, write_csv):
        path = write_csv("sex,t,d", ["m,1,1", "f,2,0", "m,3,0"])
        sample = ingest_csv(path, "sex", "t", "d")
        assert sample.categorical
        assert sample.levels == ("f", "m")

    def test_forced_categorical(self, write_csv):
        path = write_csv("g,t,d", ["0,1,1", "1,2,0"])
        assert ingest_csv(path, "g", "t", "d", categorical=True).levels == ("0", "1")

    @pytest.mark.parametrize(
        "rows, row",
        [
            (["1,2,1", "1,-1,0"], 2),
            (["1,abc,1"], 1),
            (["1,2,1", "2,3,1", "3,4,2"], 3),
            (["1,2,1", "NA,3,0", "1,inf,0"], 3),
        ],
    )
    def test_parse_errors_report_row(self, write_csv, rows, row):
        path = write_csv("x,t,d", rows)
        with pytest.raises(ParseError) as info:
            ingest_csv(path, "x", "t", "d")
        assert info.value.row == row

    def test_missing_column(self, write_csv):
        path = write_csv("x,t,status", ["1,2,1"])
        with pytest.raises(MissingColumn):
            ingest_csv(path, "x", "t", "d")

    def test_nothing_left(self, write_csv):
        path = write_csv("x,t,d", ["NA,1,1"])
        with pytest.raises(EmptyAfterFiltering):
            ingest_csv(path, "x", "t", "d")

    def test_missing_file(self, tmp_path):
        with pytest.raises(UsageError):
            ingest_csv(str(tmp_path / "none.csv"), "x", "t", "d")

    def test_bmt_size(self, bmt_loader):
        assert bmt_loader("z1").n == 137


class TestEmit:
    def test_json_round_trip_is_exact(self, random_sample):
        estimate = probcure(random_sample, np.linspace(0.1, 0.9, 7), BandwidthSpec.single(0.3))
        document = json.loads(render_json(estimate, ControlParams()))
        assert document["kind"] == "cure"
        restored = np.array([np.nan if v is None else v for v in document["result"]["cure"]])
        assert np.array_equal(restored, estimate.cure, equal_nan=True)
        assert document["params"]["B"] == 999

    def test_json_has_no_nan_tokens(self, random_sample):
        estimate = probcure(random_sample, [0.5, 50.0], BandwidthSpec.single(0.3))
        text = render_json(estimate)
        assert "NaN" not in text
        assert json.loads(text)["result"]["cure"][1] is None

    def test_testmz_csv_row(self):
        result = testmz(SurvivalSample(x=np.zeros(4), t=[1.0, 2.0, 9.0, 9.0], d=[1, 1, 0, 0]))
        lines = render_csv(result).splitlines()
        assert lines[0] == "statistic,n,delta,interval_lo,interval_hi,pvalue"
        assert lines[1] == "2,4,7,0,2,0.0625"

    def test_testmz_json_keeps_counts_integral(self):
        result = testmz(SurvivalSample(x=np.zeros(4), t=[1.0, 2.0, 9.0, 9.0], d=[1, 1, 0, 0]))
        doc = json.loads(render_json(result))["result"]
        assert doc["statistic"] == 2 and isinstance(doc["statistic"], int)
        assert doc["n"] == 4 and isinstance(doc["n"], int)
        assert doc["interval"] == [0.0, 2.0]
        assert doc["pvalue"] == 0.0625

    def test_testcov_json_carries_bootstrap_statistics(self, sim_sample):
        params = ControlParams(B=9, seed=3, workers=1, hsave=True)
        doc = json.loads(render_json(testcov(sim_sample, params)))["result"]
        assert len(doc["cm_boot"]) == 9 and len(doc["ks_boot"]) == 9
        assert isinstance(doc["B"], int)
        plain = json.loads(render_json(testcov(sim_sample, params.with_updates(hsave=False))))["result"]
        assert "cm_boot" not in plain

    def test_curve_table_is_long(self, random_sample):
        estimate = latency(random_sample, [0.3, 0.6], BandwidthSpec.single(0.3), eval_times=[0.5, 1.0, 1.5])
        frame = to_frame(estimate)
        assert len(frame) == 6
        assert frame["x0"].tolist() == [0.3, 0.3, 0.3, 0.6, 0.6, 0.6]

    def test_csv_uses_na(self, random_sample):
        estimate = probcure(random_sample, [50.0], BandwidthSpec.single(0.3))
        assert ",NA," in render_csv(estimate)

    def test_kmcure_text(self):
        sample = SurvivalSample.from_arrays(["a", "a", "b", "b"], [1.0, 2.0, 1.0, 2.0], [1, 0, 1, 1], categorical=True)
        text = render_text(km_cure_by_strata(sample))
        assert "Unconditional cure rate" in text
        assert "0.5" in text

    def test_selection_text(self, sim_sample, fast_params):
        from curekit.beran import berancv

        text = render_text(berancv(sim_sample, [0.0], fast_params))
        assert text.startswith("Selected bandwidths")

    def test_simulation_csv(self):
        text = render_csv(simulate_model(5, seed=1))
        assert text.splitlines()[0] == "x,t,d"
        assert len(text.splitlines()) == 6

    def test_writes_destination(self, tmp_path):
        result = testmz(SurvivalSample(x=np.zeros(2), t=[1.0, 2.0], d=[1, 0]))
        path = tmp_path / "out" / "mz.json"
        text = emit_results(result, "json", str(path))
        assert path.read_text(encoding="utf-8") == text

    def test_unknown_format(self):
        result = testmz(SurvivalSample(x=np.zeros(2), t=[1.0, 2.0], d=[1, 0]))
        with pytest.raises(UsageError):
            emit_results(result, "xml")
