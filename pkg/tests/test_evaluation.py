from evaluation import filter_dataset, load_dataset, preprocess_model_input


def test_load_dataset_rows(toy_corpus):
    rows = load_dataset(str(toy_corpus), "val") + load_dataset(str(toy_corpus), "test")
    assert rows
    for row in rows:
        assert row["image_path"].startswith(str(toy_corpus))
        assert row["target"]["caption"]
        assert preprocess_model_input(row) == {"image_path": row["image_path"]}


def test_filter_dataset():
    rows = [{"id": i} for i in range(5)]
    assert filter_dataset(rows, first_n=2) == rows[:2]
    assert filter_dataset(rows, ids=[4, 1]) == [rows[1], rows[4]]
    assert filter_dataset(rows) == rows
