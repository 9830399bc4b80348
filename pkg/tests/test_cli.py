"""End-to-end command-line behavior: pipelines, config files, exit codes."""

import json

import pytest

from hardmono.cli import main
from hardmono.corpus import parse_dataset

TINY = ["--hidden", "8", "--embed", "6", "--feat-embed", "3",
        "--epochs", "1", "--patience", "1", "--dropout", "0.0"]


@pytest.fixture(scope="module")
def lang(tmp_path_factory):
    root = tmp_path_factory.mktemp("lang")
    assert main(["synth", "--out", str(root), "--seed", "3",
                 "--train-size", "12", "--dev-size", "6", "--test-size", "6"]) == 0
    return root


@pytest.fixture(scope="module")
def checkpoints(tmp_path_factory, lang):
    root = tmp_path_factory.mktemp("ckpts")
    for arch in ("HACM", "HAEM"):
        for aligner in ("smart", "naive"):
            out = root / f"{arch}_{aligner}"
            code = main(["train", "--arch", arch, "--aligner", aligner,
                         "--train", str(lang / "train.tsv"),
                         "--dev", str(lang / "dev.tsv"),
                         "--out", str(out), "--seed", "1", *TINY])
            assert code == 0
    return root


def test_synth_files_parse(lang):
    assert len(parse_dataset(str(lang / "train.tsv"))) == 12
    assert len(parse_dataset(str(lang / "dev.tsv"))) == 6
    assert len(parse_dataset(str(lang / "test.tsv"))) == 6


def test_align_output(lang, capsys):
    assert main(["align", "--data", str(lang / "dev.tsv"), "--aligner", "smart"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 6
    lemma, form, rendered = lines[0].split("\t")
    assert ":" in rendered
    assert lemma and form


def test_oracle_trace_output(lang, capsys):
    assert main(["oracle", "--data", str(lang / "dev.tsv"), "--arch", "HAEM",
                 "--trace"]) == 0
    first = capsys.readouterr().out.splitlines()[0].split("\t")
    assert len(first) == 4
    assert "STOP" in first[2]
    assert all(t.isdigit() for t in first[3].split())


def test_train_artifacts(checkpoints):
    ckpt = checkpoints / "HACM_smart"
    manifest = json.loads((ckpt / "manifest.json").read_text())
    assert manifest["arch"] == "HACM"
    assert manifest["aligner"] == "smart"
    assert 0.0 <= manifest["dev_accuracy"] <= 1.0
    history = [json.loads(line) for line in
               (ckpt / "history.jsonl").read_text().splitlines()]
    assert history and set(history[0]) == {"epoch", "train_loss", "dev_accuracy"}


def test_predict_output_format(lang, checkpoints, tmp_path, capsys):
    out = tmp_path / "preds.tsv"
    assert main(["predict", "--model", str(checkpoints / "HAEM_smart"),
                 "--input", str(lang / "test.tsv"), "--out", str(out)]) == 0
    gold = parse_dataset(str(lang / "test.tsv"))
    lines = out.read_text().splitlines()
    assert len(lines) == len(gold)
    for s, line in zip(gold, lines):
        lemma, _, features = line.split("\t")
        assert lemma == s.lemma
        assert features == ";".join(s.features)


def test_predict_unlabeled_input(lang, checkpoints, tmp_path, capsys):
    bare = tmp_path / "bare.tsv"
    samples = parse_dataset(str(lang / "test.tsv"))
    bare.write_text("".join(f"{s.lemma}\t{';'.join(s.features)}\n" for s in samples))
    assert main(["predict", "--model", str(checkpoints / "HACM_naive"),
                 "--input", str(bare), "--no-form"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == len(samples)


def test_eval_formats(lang, tmp_path, capsys):
    # score the gold file against itself: accuracy 1, distance 0
    pred = tmp_path / "echo.tsv"
    samples = parse_dataset(str(lang / "test.tsv"))
    pred.write_text("".join(f"{s.lemma}\t{s.form}\t{';'.join(s.features)}\n"
                            for s in samples))
    assert main(["eval", "--language", "synthetic",
                 "--gold", str(lang / "test.tsv"), "--pred", str(pred)]) == 0
    out = capsys.readouterr().out
    assert "synthetic\t1.0000\t0.0000\t6" in out
    assert "macro-avg\t1.0000" in out
    assert main(["eval", "--language", "synthetic", "--format", "golden",
                 "--gold", str(lang / "test.tsv"), "--pred", str(pred)]) == 0
    assert "macro-avg" in capsys.readouterr().out


def test_ensemble_run2(lang, checkpoints, tmp_path, capsys):
    out = tmp_path / "ens.tsv"
    code = main(["ensemble", "--run", "2",
                 "--pool", str(checkpoints / "HACM_smart"), str(checkpoints / "HACM_naive"),
                 "--dev", str(lang / "dev.tsv"), "--test", str(lang / "test.tsv"),
                 "--out", str(out)])
    assert code == 0
    assert "run 2: ENSEMBLE_7(HACM)" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) == 6


def test_ensemble_external_wins_run5(lang, checkpoints, tmp_path, capsys):
    test_samples = parse_dataset(str(lang / "test.tsv"))
    dev_samples = parse_dataset(str(lang / "dev.tsv"))
    ext_test = tmp_path / "ext_test.txt"
    ext_dev = tmp_path / "ext_dev.txt"
    ext_test.write_text("".join(s.form + "\n" for s in test_samples))
    ext_dev.write_text("".join(s.form + "\n" for s in dev_samples))
    out = tmp_path / "ens5.tsv"
    code = main(["ensemble", "--run", "5",
                 "--pool", *(str(checkpoints / d) for d in
                             ("HACM_smart", "HACM_naive", "HAEM_smart", "HAEM_naive")),
                 "--dev", str(lang / "dev.tsv"), "--test", str(lang / "test.tsv"),
                 "--external", str(ext_test), "--external-dev", str(ext_dev),
                 "--external-dev-acc", "1.0", "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "external" in stdout
    assert "test accuracy=1.0000" in stdout
    forms = [line.split("\t")[1] for line in out.read_text().splitlines()]
    assert forms == [s.form for s in test_samples]


def test_ensemble_external_needs_accuracy(lang, checkpoints, tmp_path, capsys):
    ext = tmp_path / "ext.txt"
    ext.write_text("x\n" * 6)
    code = main(["ensemble", "--run", "5",
                 "--pool", str(checkpoints / "HACM_smart"),
                 "--dev", str(lang / "dev.tsv"), "--test", str(lang / "test.tsv"),
                 "--external", str(ext)])
    assert code == 2


def test_config_file_supplies_flags(tmp_path, capsys):
    cfg = tmp_path / "synth.cfg"
    cfg.write_text(f"out = {tmp_path / 'made'}\n"
                   "train-size = 4\ndev-size = 2\ntest-size = 2\nseed = 9\n")
    assert main(["synth", "--config", str(cfg)]) == 0
    made = parse_dataset(str(tmp_path / "made" / "train.tsv"))
    assert len(made) == 4
    # explicit flag overrides the file
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "other"),
                 "--seed", "10"]) == 0
    other = parse_dataset(str(tmp_path / "other" / "train.tsv"))
    assert [s.lemma for s in other] != [s.lemma for s in made]


def test_exit_codes(tmp_path, capsys):
    assert main(["train", "--arch", "GRU", "--train", "x", "--dev", "y",
                 "--out", "z"]) == 1
    assert main(["predict", "--model", str(tmp_path / "none"),
                 "--input", str(tmp_path / "none.tsv")]) == 2
    assert main(["align", "--data", str(tmp_path / "missing.tsv")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("not-a-flag = 1\n")
    assert main(["synth", "--config", str(bad), "--out", str(tmp_path / "s")]) == 1
    assert main(["--help"]) == 0
    assert main(["eval", "--language", "a", "--gold", "x"]) == 1  # missing --pred


def test_train_bad_hyperparameters_are_usage_errors(lang):
    assert main(["train", "--arch", "HACM", "--train", str(lang / "train.tsv"),
                 "--dev", str(lang / "dev.tsv"), "--out", "unused",
                 "--epochs", "0"]) == 1


def test_run_end_to_end_deterministic(tmp_path, capsys):
    args = ["run", "--synth", "--synth-seed", "4",
            "--train-size", "8", "--dev-size", "4", "--test-size", "4",
            "--run", "2", "--hacm-smart", "1", "--hacm-naive", "1",
            "--haem-smart", "0", "--haem-naive", "0", "--seed", "2", *TINY]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    first = (tmp_path / "a" / "predictions.tsv").read_bytes()
    second = (tmp_path / "b" / "predictions.tsv").read_bytes()
    assert first == second
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["run"] == 2
    assert manifest["counts"]["HACM/smart"] == 1
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["system"] == "ENSEMBLE_7(HACM)"
    assert len(report["models"]) == 2
    assert "test_accuracy" in report


def test_run_empty_pool(tmp_path, capsys):
    code = main(["run", "--synth", "--out", str(tmp_path / "r"),
                 "--hacm-smart", "0", "--hacm-naive", "0",
                 "--haem-smart", "0", "--haem-naive", "0", *TINY])
    assert code == 2
