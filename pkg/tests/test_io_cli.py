import io
import os
import subprocess
import sys

import pytest

from conftest import det
from flowtrack import io as ftio
from flowtrack.errors import DataError
from flowtrack.graph import Trajectory
from flowtrack.metrics import clear_mot


class TestParseDetections:
    def test_single_line(self):
        dets = ftio.parse_detections(io.StringIO("0,-1,10,20,30,40,0.9\n"))
        assert list(dets) == [0]
        d = dets[0][0]
        assert d.box == (10.0, 20.0, 30.0, 40.0)
        assert d.score == 0.9
        assert d.key == (0, 0)

    def test_empty_file(self):
        assert ftio.parse_detections(io.StringIO("")) == {}

    def test_zero_width_names_line(self):
        text = "0,-1,1,1,5,5,0.5\n1,-1,1,1,0,5,0.5\n"
        with pytest.raises(DataError, match="line 2"):
            ftio.parse_detections(io.StringIO(text))

    def test_nonfinite_rejected(self):
        with pytest.raises(DataError):
            ftio.parse_detections(io.StringIO("0,-1,1,1,5,5,nan\n"))
        with pytest.raises(DataError, match="line 1"):
            ftio.parse_detections(io.StringIO("0,-1,x,1,5,5,0.5\n"))

    def test_sparse_frames_filled(self):
        text = "0,-1,1,1,5,5,0.5\n3,-1,1,1,5,5,0.5\n"
        dets = ftio.parse_detections(io.StringIO(text))
        assert sorted(dets) == [0, 1, 2, 3]
        assert dets[1] == [] and dets[2] == []

    def test_local_indices_follow_file_order(self):
        text = "0,-1,1,1,5,5,0.5\n0,-1,9,9,5,5,0.7\n"
        dets = ftio.parse_detections(io.StringIO(text))
        assert [d.local_index for d in dets[0]] == [0, 1]

    def test_extra_columns_kept(self):
        dets = ftio.parse_detections(io.StringIO("0,-1,1,1,5,5,0.5,0.8,0.3\n"))
        assert dets[0][0].extras == (0.8, 0.3)

    def test_inconsistent_columns_rejected(self):
        text = "0,-1,1,1,5,5,0.5,0.8\n0,-1,2,2,5,5,0.5\n"
        with pytest.raises(DataError, match="line 2"):
            ftio.parse_detections(io.StringIO(text))

    def test_comments_and_blanks_skipped(self):
        text = "# header\n\n0,-1,1,1,5,5,0.5\n"
        assert len(ftio.parse_detections(io.StringIO(text))[0]) == 1


class TestWriteTracks:
    def test_sorted_and_formatted(self):
        trajs = [Trajectory(1, [det(0, 0), det(1, 0)], 0.0),
                 Trajectory(0, [det(0, 1, x=250.0), det(1, 1, x=250.0)], 0.0)]
        buf = io.StringIO()
        ftio.write_tracks(buf, trajs)
        lines = buf.getvalue().splitlines()
        assert lines == ["0,0,250,0,10,10", "0,1,0,0,10,10",
                         "1,0,250,0,10,10", "1,1,0,0,10,10"]

    def test_empty_solution_empty_file(self):
        buf = io.StringIO()
        ftio.write_tracks(buf, [])
        assert buf.getvalue() == ""

    def test_round_trip_via_parse_tracks(self):
        trajs = [Trajectory(3, [det(0, 0, x=12.5)], 0.0)]
        buf = io.StringIO()
        ftio.write_tracks(buf, trajs)
        frames = ftio.parse_tracks(io.StringIO(buf.getvalue()))
        assert frames == {0: [(3, (12.5, 0.0, 10.0, 10.0))]}


class TestGroundTruthIo:
    def test_round_trip(self):
        gt_text = "0,-1,1,1,5,5,0.5,7\n1,-1,2,2,5,5,0.5,7\n"
        dets, gt = ftio.parse_ground_truth(io.StringIO(gt_text))
        assert gt.frames[0] == [(7, (1.0, 1.0, 5.0, 5.0))]
        assert len(dets[1]) == 1

    def test_duplicate_gt_id_in_frame_rejected(self):
        text = "0,-1,1,1,5,5,0.5,7\n0,-1,9,9,5,5,0.5,7\n"
        with pytest.raises(DataError):
            ftio.parse_ground_truth(io.StringIO(text))


class TestConfig:
    def test_load_and_comments(self):
        text = "beta = 2.0  # slope\n\nentry_cost=1.5\n"
        cfg = ftio.load_config(io.StringIO(text))
        assert cfg == {"beta": "2.0", "entry_cost": "1.5"}

    def test_malformed_line(self):
        with pytest.raises(DataError, match="line 1"):
            ftio.load_config(io.StringIO("just words\n"))
        with pytest.raises(DataError):
            ftio.load_config(io.StringIO("= 3\n"))


class TestStreamBlocks:
    def test_blocks_parsed_in_order(self):
        text = "0,-1,1,1,5,5,0.5\n0,-1,9,9,5,5,0.6\n\n1,-1,2,2,5,5,0.5\n\n"
        stream = io.StringIO(text)
        f0 = ftio.parse_stream_frame(stream)
        f1 = ftio.parse_stream_frame(stream)
        end = ftio.parse_stream_frame(stream)
        assert f0[0] == 0 and len(f0[1]) == 2
        assert [d.local_index for d in f0[1]] == [0, 1]
        assert f1[0] == 1 and len(f1[1]) == 1
        assert end is None

    def test_mixed_frames_in_block_rejected(self):
        text = "0,-1,1,1,5,5,0.5\n1,-1,2,2,5,5,0.5\n\n"
        with pytest.raises(DataError):
            ftio.parse_stream_frame(io.StringIO(text))


def run_cli(*args, stdin=None, env_extra=None):
    env = dict(os.environ)
    env.pop("FLOWTRACK_CONFIG", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "flowtrack.cli", *args],
                          input=stdin, capture_output=True, text=True, env=env)


@pytest.fixture(scope="module")
def sample_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    det_path = root / "det.csv"
    gt_path = root / "gt.csv"
    r = run_cli("synth", "--seed", "5", "--frames", "15", "--tracks", "3",
                "--miss-rate", "0.1", "--fp-rate", "0.1",
                "-o", str(det_path), "--gt-output", str(gt_path))
    assert r.returncode == 0, r.stderr
    return root, det_path, gt_path


class TestCli:
    def test_track_solvers_agree(self, sample_files):
        # same trajectories up to the (arbitrary) id labels
        root, det_path, _ = sample_files
        outs = {}
        for solver in ("ssp", "dssp", "odssp"):
            out = root / f"tracks_{solver}.csv"
            r = run_cli("track", "-i", str(det_path), "-o", str(out),
                        "--solver", solver)
            assert r.returncode == 0, r.stderr
            tracks = {}
            for f, objs in ftio.parse_tracks(str(out)).items():
                for tid, box in objs:
                    tracks.setdefault(tid, []).append((f, box))
            outs[solver] = sorted(sorted(v) for v in tracks.values())
        assert outs["ssp"] == outs["dssp"] == outs["odssp"]

    def test_track_deterministic_bytes(self, sample_files):
        root, det_path, _ = sample_files
        a, b = root / "a.csv", root / "b.csv"
        for out in (a, b):
            r = run_cli("track", "-i", str(det_path), "-o", str(out),
                        "--solver", "mbodssp", "--window", "6")
            assert r.returncode == 0, r.stderr
        assert a.read_bytes() == b.read_bytes()

    def test_eval_reports_metrics(self, sample_files):
        root, det_path, gt_path = sample_files
        out = root / "tracks_eval.csv"
        run_cli("track", "-i", str(det_path), "-o", str(out))
        r = run_cli("eval", "--gt", str(gt_path), "--tracks", str(out))
        assert r.returncode == 0, r.stderr
        assert "MOTA" in r.stdout and "IDS" in r.stdout

    def test_round_trip_self_evaluation(self, sample_files):
        root, det_path, _ = sample_files
        tracks = root / "tracks_rt.csv"
        gt2 = root / "tracks_as_gt.csv"
        run_cli("track", "-i", str(det_path), "-o", str(tracks))
        r = run_cli("tracks-to-gt", "-i", str(tracks), "-o", str(gt2))
        assert r.returncode == 0, r.stderr
        r = run_cli("eval", "--gt", str(gt2), "--tracks", str(tracks))
        assert r.returncode == 0, r.stderr
        assert "MOTA 1.0000" in r.stdout
        assert "IDS 0" in r.stdout

    def test_oracle_matches_ssp_on_tiny_input(self, tmp_path):
        det_path = tmp_path / "tiny.csv"
        r = run_cli("synth", "--seed", "1", "--frames", "3", "--tracks", "2",
                    "-o", str(det_path))
        assert r.returncode == 0
        a, b = tmp_path / "ssp.csv", tmp_path / "oracle.csv"
        run_cli("track", "-i", str(det_path), "-o", str(a))
        r = run_cli("oracle", "-i", str(det_path), "-o", str(b),
                    "--max-detections", "20")
        assert r.returncode == 0, r.stderr
        assert a.read_text() == b.read_text()

    def test_bench_emits_rows(self, sample_files):
        root, det_path, _ = sample_files
        out = root / "bench.csv"
        r = run_cli("bench", "-i", str(det_path), "-o", str(out),
                    "--solvers", "ssp,mbodssp", "--taus", "4")
        assert r.returncode == 0, r.stderr
        lines = out.read_text().splitlines()
        assert lines[0].startswith("solver,tau,frame")
        assert any(line.startswith("mbodssp,4,") for line in lines)

    def test_streaming_mode(self, sample_files):
        _, det_path, _ = sample_files
        batch = run_cli("track", "-i", str(det_path), "-o", "-",
                        "--solver", "odssp")
        blocks = []
        dets = ftio.parse_detections(str(det_path))
        for f in sorted(dets):
            rows = [f"{d.frame},-1,{d.box[0]},{d.box[1]},{d.box[2]},"
                    f"{d.box[3]},{d.score}" for d in dets[f]]
            blocks.append("\n".join(rows))
        stdin = "\n\n".join(blocks) + "\n\n"
        streamed = run_cli("track", "--stream", "--solver", "odssp",
                           "-o", "-", stdin=stdin)
        assert streamed.returncode == 0, streamed.stderr
        assert sorted(streamed.stdout.splitlines()) == \
            sorted(batch.stdout.splitlines())

    def test_config_file_and_env_precedence(self, sample_files, tmp_path):
        root, det_path, _ = sample_files
        cfg = tmp_path / "model.cfg"
        cfg.write_text("entry_cost = 50\nexit_cost = 50\n")
        # huge entry/exit costs suppress all tracks
        r = run_cli("track", "-i", str(det_path), "-o", "-",
                    "--config", str(cfg))
        assert r.returncode == 0 and r.stdout == ""
        r = run_cli("track", "-i", str(det_path), "-o", "-",
                    env_extra={"FLOWTRACK_CONFIG": str(cfg)})
        assert r.returncode == 0 and r.stdout == ""
        # CLI flag overrides the file
        r = run_cli("track", "-i", str(det_path), "-o", "-",
                    "--config", str(cfg), "--entry-cost", "2",
                    "--exit-cost", "2")
        assert r.returncode == 0 and r.stdout != ""

    def test_exit_code_usage_error(self):
        r = run_cli("track", "--solver", "definitely-not-a-solver")
        assert r.returncode == 1
        r = run_cli("no-such-command")
        assert r.returncode == 1

    def test_exit_code_data_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("0,-1,1,1,0,5,0.5\n")  # zero width
        r = run_cli("track", "-i", str(bad), "-o", "-")
        assert r.returncode == 2
        assert "line 1" in r.stderr
        r = run_cli("track", "-i", str(tmp_path / "missing.csv"), "-o", "-")
        assert r.returncode == 2

    def test_mbodssp_requires_window(self, sample_files):
        _, det_path, _ = sample_files
        r = run_cli("track", "-i", str(det_path), "--solver", "mbodssp")
        assert r.returncode == 2
