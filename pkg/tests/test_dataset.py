"""Dataset store, stratified splitting, and zoom augmentation tests."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasic.dataset import (
    AugmentConfig,
    DatasetEntry,
    DatasetManifest,
    DatasetStore,
    PhasicityLabel,
    assign_split,
    load_training_pairs,
    manifest_from_json,
    manifest_to_json,
    parse_label,
    random_zoom,
)
from phasic.dsp import AudioClip, Spectrogram, StftParams
from phasic.errors import EmptyError, IoError, RangeError, ShapeError
from phasic.synth import SynthParams, generate_corpus


def entries_of(label, n, split="unassigned"):
    return [DatasetEntry(id=f"{label.name.lower()}-{i}", wav_path=f"wav/{i}.wav",
                         label=label, split=split) for i in range(n)]


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------


def test_label_codes_stable():
    assert PhasicityLabel.Monophasic.value == 0
    assert PhasicityLabel.Biphasic.value == 1
    assert PhasicityLabel.Triphasic.value == 2
    assert len(PhasicityLabel) == 3


def test_parse_label_case_insensitive():
    assert parse_label("Triphasic") is PhasicityLabel.Triphasic
    assert parse_label("biphasic") is PhasicityLabel.Biphasic
    assert parse_label("MONOPHASIC") is PhasicityLabel.Monophasic


def test_parse_label_rejects_unknown():
    with pytest.raises(RangeError):
        parse_label("quadphasic")


# ---------------------------------------------------------------------------
# Manifest serialization
# ---------------------------------------------------------------------------


def test_manifest_roundtrip_preserves_all_fields():
    entries = [
        DatasetEntry(id="a1", wav_path="wav/a1.wav", label=PhasicityLabel.Triphasic,
                     artery="posterior tibial", split="train", source="clinical"),
        DatasetEntry(id="b2", wav_path="wav/b2.wav", label=PhasicityLabel.Monophasic,
                     artery=None, split="unassigned", source="ui_upload"),
    ]
    manifest = DatasetManifest(entries=entries)
    back = manifest_from_json(manifest_to_json(manifest))
    assert back.version == manifest.version
    assert back.entries == entries


def test_manifest_json_is_human_readable():
    import json

    manifest = DatasetManifest(entries=entries_of(PhasicityLabel.Biphasic, 2))
    doc = json.loads(manifest_to_json(manifest))
    assert doc["version"] == 1
    assert doc["entries"][0]["label"] == "Biphasic"
    assert set(doc["entries"][0]) == {"id", "wav_path", "label", "artery",
                                      "split", "source"}


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------


def test_add_entry_appends_and_persists(tmp_path):
    store = DatasetStore(tmp_path)
    manifest = DatasetManifest(entries=[])
    clip = AudioClip(np.zeros(16000), 16000)

    entry = store.add_entry(manifest, clip, PhasicityLabel.Triphasic,
                            artery="dorsalis pedis")
    assert len(manifest.entries) == 1
    assert entry.split == "unassigned"
    assert entry.source == "ui_upload"

    reloaded = store.load_manifest()
    assert reloaded.entries == manifest.entries
    clip_back = store.read_clip(entry)
    assert len(clip_back.samples) == 16000


def test_add_entry_ids_unique(tmp_path):
    store = DatasetStore(tmp_path)
    manifest = DatasetManifest(entries=[])
    clip = AudioClip(np.zeros(8000), 16000)
    ids = {store.add_entry(manifest, clip, PhasicityLabel.Biphasic).id
           for _ in range(20)}
    assert len(ids) == 20


def test_store_root_colliding_with_file_raises(tmp_path):
    blocker = tmp_path / "blocked"
    blocker.write_text("not a directory")
    with pytest.raises(IoError):
        DatasetStore(blocker)


def test_add_entry_unwritable_storage_raises(tmp_path):
    store = DatasetStore(tmp_path)
    wav_dir = tmp_path / "wav"
    wav_dir.rmdir()
    wav_dir.write_text("now a file")  # every write under wav/ must fail
    with pytest.raises(IoError):
        store.add_entry(DatasetManifest(entries=[]),
                        AudioClip(np.zeros(100), 16000), PhasicityLabel.Biphasic)


def test_load_manifest_missing_file_is_empty(tmp_path):
    manifest = DatasetStore(tmp_path).load_manifest()
    assert manifest.entries == []


def test_read_clip_missing_wav_raises(tmp_path):
    store = DatasetStore(tmp_path)
    entry = DatasetEntry(id="ghost", wav_path="wav/ghost.wav",
                         label=PhasicityLabel.Monophasic)
    with pytest.raises(IoError):
        store.read_clip(entry)


# ---------------------------------------------------------------------------
# Split assignment
# ---------------------------------------------------------------------------


def test_ten_entries_one_class_eight_two():
    manifest = DatasetManifest(entries=entries_of(PhasicityLabel.Triphasic, 10))
    out = assign_split(manifest, 0.8, seed=0)
    splits = [e.split for e in out.entries]
    assert splits.count("train") == 8
    assert splits.count("test") == 2


def test_balanced_300_gives_240_60_stratified():
    entries = []
    for label in PhasicityLabel:
        entries.extend(entries_of(label, 100))
    out = assign_split(DatasetManifest(entries=entries), 0.8, seed=5)
    assert sum(e.split == "train" for e in out.entries) == 240
    assert sum(e.split == "test" for e in out.entries) == 60
    for label in PhasicityLabel:
        per_class = [e for e in out.entries if e.label == label]
        assert sum(e.split == "train" for e in per_class) == 80


def test_same_seed_identical_assignment():
    entries = entries_of(PhasicityLabel.Biphasic, 37)
    a = assign_split(DatasetManifest(entries=entries), 0.7, seed=9)
    b = assign_split(DatasetManifest(entries=entries), 0.7, seed=9)
    assert [e.split for e in a.entries] == [e.split for e in b.entries]


def test_input_manifest_not_mutated():
    manifest = DatasetManifest(entries=entries_of(PhasicityLabel.Triphasic, 5))
    assign_split(manifest, 0.8, seed=0)
    assert all(e.split == "unassigned" for e in manifest.entries)


def test_empty_manifest_rejected():
    with pytest.raises(EmptyError):
        assign_split(DatasetManifest(entries=[]), 0.8, seed=0)


def test_fraction_out_of_range_rejected():
    manifest = DatasetManifest(entries=entries_of(PhasicityLabel.Biphasic, 4))
    with pytest.raises(RangeError):
        assign_split(manifest, 0.0, seed=0)
    with pytest.raises(RangeError):
        assign_split(manifest, 1.0, seed=0)


@settings(max_examples=50, deadline=None)
@given(n_mono=st.integers(1, 40), n_bi=st.integers(1, 40), n_tri=st.integers(1, 40),
       fraction=st.floats(0.05, 0.95), seed=st.integers(0, 2**32 - 1))
def test_split_partition_property(n_mono, n_bi, n_tri, fraction, seed):
    entries = (entries_of(PhasicityLabel.Monophasic, n_mono)
               + entries_of(PhasicityLabel.Biphasic, n_bi)
               + entries_of(PhasicityLabel.Triphasic, n_tri))
    out = assign_split(DatasetManifest(entries=entries), fraction, seed=seed)

    # disjoint and exhaustive
    assert all(e.split in ("train", "test") for e in out.entries)
    assert len(out.entries) == n_mono + n_bi + n_tri

    # per-class train count follows round-half-up of the requested fraction
    for label, n in ((PhasicityLabel.Monophasic, n_mono),
                     (PhasicityLabel.Biphasic, n_bi),
                     (PhasicityLabel.Triphasic, n_tri)):
        got = sum(1 for e in out.entries if e.label == label and e.split == "train")
        assert got == int(np.floor(fraction * n + 0.5))


# ---------------------------------------------------------------------------
# Zoom augmentation
# ---------------------------------------------------------------------------


def test_zoom_draw_one_is_identity():
    rng = np.random.default_rng(13)
    spec = Spectrogram(rng.uniform(-80, 0, (64, 64)))
    out = random_zoom(spec, AugmentConfig(zoom_fraction=0.2, mode="in_only"), draw=1.0)
    np.testing.assert_array_equal(out.values, spec.values)


def test_zoom_shape_preserved_any_draw():
    rng = np.random.default_rng(14)
    spec = Spectrogram(rng.uniform(-80, 0, (32, 32)))
    for mode in ("in_only", "in_out"):
        for draw in (0.0, 0.3, 0.5, 0.77, 1.0):
            out = random_zoom(spec, AugmentConfig(mode=mode), draw=draw)
            assert out.values.shape == (32, 32)


def test_zoom_in_constant_stays_constant():
    spec = Spectrogram(np.full((64, 64), -12.5))
    out = random_zoom(spec, AugmentConfig(zoom_fraction=0.2, mode="in_only"), draw=0.0)
    np.testing.assert_allclose(out.values, -12.5, atol=1e-12)


def test_zoom_out_pads_with_floor():
    spec = Spectrogram(np.full((64, 64), 0.0), floor_db=-80.0)
    # draw 1.0 in in_out mode = maximum zoom-out
    out = random_zoom(spec, AugmentConfig(zoom_fraction=0.2, mode="in_out"), draw=1.0)
    assert out.values.shape == (64, 64)
    assert out.values.min() < -1.0  # padding mixed in from the floor
    assert out.values.max() <= 0.0 + 1e-12


def test_zoom_non_square_rejected():
    with pytest.raises(ShapeError):
        random_zoom(Spectrogram(np.zeros((32, 64))), AugmentConfig(), draw=0.5)


def test_zoom_fraction_bounds_enforced():
    with pytest.raises(RangeError):
        AugmentConfig(zoom_fraction=0.6)
    with pytest.raises(RangeError):
        AugmentConfig(zoom_fraction=-0.1)
    with pytest.raises(RangeError):
        AugmentConfig(mode="sideways")


def test_zoom_deterministic_given_draw():
    rng = np.random.default_rng(15)
    spec = Spectrogram(rng.uniform(-80, 0, (64, 64)))
    cfg = AugmentConfig(zoom_fraction=0.3, mode="in_out")
    a = random_zoom(spec, cfg, draw=0.42)
    b = random_zoom(spec, cfg, draw=0.42)
    assert np.array_equal(a.values, b.values)


# ---------------------------------------------------------------------------
# Training pairs
# ---------------------------------------------------------------------------


def test_pairs_counts_and_labels(tiny_corpus):
    params = StftParams()
    train_pairs = load_training_pairs(tiny_corpus.store, tiny_corpus.manifest,
                                      "train", params, side=32)
    test_pairs = load_training_pairs(tiny_corpus.store, tiny_corpus.manifest,
                                     "test", params, side=32)
    n_train = sum(e.split == "train" for e in tiny_corpus.manifest.entries)
    n_test = sum(e.split == "test" for e in tiny_corpus.manifest.entries)
    assert len(train_pairs) == n_train
    assert len(test_pairs) == n_test

    by_split = [e.label for e in tiny_corpus.manifest.entries if e.split == "train"]
    assert [label for _, label in train_pairs] == by_split
    assert all(spec.values.shape == (32, 32) for spec, _ in train_pairs)


def test_test_split_never_augmented(tiny_corpus):
    params = StftParams()
    plain = load_training_pairs(tiny_corpus.store, tiny_corpus.manifest,
                                "test", params, side=32)
    augmented = load_training_pairs(tiny_corpus.store, tiny_corpus.manifest,
                                    "test", params, side=32,
                                    augment=AugmentConfig(seed=77))
    for (a, _), (b, _) in zip(plain, augmented):
        assert np.array_equal(a.values, b.values)


def test_train_split_augmentation_changes_values(tiny_corpus):
    params = StftParams()
    plain = load_training_pairs(tiny_corpus.store, tiny_corpus.manifest,
                                "train", params, side=32)
    augmented = load_training_pairs(tiny_corpus.store, tiny_corpus.manifest,
                                    "train", params, side=32,
                                    augment=AugmentConfig(seed=77))
    assert any(not np.array_equal(a.values, b.values)
               for (a, _), (b, _) in zip(plain, augmented))
    # labels must be untouched by augmentation
    assert [l for _, l in plain] == [l for _, l in augmented]


def test_missing_wav_names_entry_id(tmp_path):
    manifest = generate_corpus(tmp_path, 1, SynthParams(seed=8))
    manifest = assign_split(manifest, 0.5, seed=0)
    store = DatasetStore(tmp_path)
    victim = manifest.entries[0]
    (tmp_path / victim.wav_path).unlink()
    victim_split = victim.split
    with pytest.raises(IoError, match=victim.id):
        load_training_pairs(store, manifest, victim_split, StftParams(), side=16)
