from __future__ import annotations

import json

from scripts.reproduce_tables import main, parse_args


def test_defaults_cover_the_four_sample_sizes():
    args = parse_args([])
    assert args.sizes == [100, 200, 400, 800]
    assert args.penalties == ["scad", "hard", "soft"]
    assert args.gammas == [1.0, 2.5]


def test_batch_run_writes_json_and_csv(tmp_path):
    output = tmp_path / "tables.json"
    csv_dir = tmp_path / "csv"
    main(
        [
            "--sizes", "100",
            "--replicates", "3",
            "--lr-n", "200",
            "--lr-replicates", "3",
            "--penalties", "soft",
            "--gammas", "1",
            "--grid-size", "8",
            "--output", str(output),
            "--csv-dir", str(csv_dir),
        ]
    )
    payload = json.loads(output.read_text(encoding="utf-8"))
    assert payload["input"]["p_n"] == {"100": 7}
    assert len(payload["tables"]) == 1
    assert payload["tables"][0]["penalty"] == "soft"
    assert payload["lr_null"]["df"] == 2
    assert len(payload["lr_null"]["statistics"]) == 3
    assert sorted(p.name for p in csv_dir.iterdir()) == [
        "deviations_n100_soft_g1.csv",
        "medians_n100_soft_g1.csv",
        "selection_n100_soft_g1.csv",
    ]
