import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import linear_scan_query
from vigil.registry import (
    DuplicateId,
    Location,
    MatchScore,
    NoAttributes,
    Sighting,
    SightingStore,
    StoreCorrupt,
    UnknownEntry,
    Watchlist,
    WatchlistEntry,
    edit_distance,
    match_watchlist,
    parse_camera_registry,
    route,
    score_match,
)

COLORS = ["red", "blue", "black", "white", "gray"]
MAKES = ["toyota", "honda", "ford"]
MODELS = ["corolla", "civic", "figo"]


def make_sighting(i, ts, camera="cam-A", **over):
    fields = dict(
        id=f"s-{i:05d}",
        camera_id=camera,
        timestamp=ts,
        color=COLORS[i % len(COLORS)],
        make=MAKES[i % len(MAKES)],
        model=MODELS[i % len(MODELS)],
        plate_text=f"KA{i % 100:02d}AB{i % 10000:04d}",
        plate_type="private",
    )
    fields.update(over)
    return Sighting(**fields)


# ---------------------------------------------------------------------------
# store basics
# ---------------------------------------------------------------------------

def test_record_single_attribute_allowed(tmp_path):
    store = SightingStore(tmp_path)
    sid = store.record_sighting(
        Sighting(id="s-1", camera_id="c", timestamp=5, color="red")
    )
    assert sid == "s-1"
    assert len(store) == 1


def test_record_no_attributes_rejected(tmp_path):
    store = SightingStore(tmp_path)
    with pytest.raises(NoAttributes):
        store.record_sighting(Sighting(id="s-1", camera_id="c", timestamp=5))


def test_duplicate_id_rejected(tmp_path):
    store = SightingStore(tmp_path)
    store.record_sighting(make_sighting(1, 10))
    with pytest.raises(DuplicateId):
        store.record_sighting(make_sighting(1, 20))


def test_persistence_round_trip(tmp_path):
    store = SightingStore(tmp_path)
    originals = [make_sighting(i, 1000 + i) for i in range(20)]
    for s in originals:
        store.record_sighting(s)
    store.close()

    reopened = SightingStore(tmp_path)
    assert len(reopened) == 20
    for a, b in zip(originals, reopened.all()):
        assert a.to_json() == b.to_json()


def test_torn_final_record_dropped(tmp_path):
    store = SightingStore(tmp_path)
    for i in range(5):
        store.record_sighting(make_sighting(i, 100 + i))
    store.close()
    log = tmp_path / "sightings.jsonl"
    data = log.read_bytes()
    log.write_bytes(data + b'{"v":1,"id":"s-torn","camera_id":"c","timest')
    reopened = SightingStore(tmp_path)
    assert len(reopened) == 5
    assert all(s.id != "s-torn" for s in reopened.all())


def test_mid_file_corruption_is_hard_error(tmp_path):
    store = SightingStore(tmp_path)
    for i in range(3):
        store.record_sighting(make_sighting(i, 100 + i))
    store.close()
    log = tmp_path / "sightings.jsonl"
    lines = log.read_bytes().split(b"\n")
    lines[1] = b"garbage{{{"
    log.write_bytes(b"\n".join(lines))
    with pytest.raises(StoreCorrupt):
        SightingStore(tmp_path)


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------

def test_empty_filter_returns_all(tmp_path):
    store = SightingStore(tmp_path)
    for i in range(7):
        store.record_sighting(make_sighting(i, 100 + i))
    assert len(store.query()) == 7


def test_time_range_excluding_everything(tmp_path):
    store = SightingStore(tmp_path)
    store.record_sighting(make_sighting(0, 100))
    assert store.query(ts_from=200, ts_to=300) == []


def test_results_time_ordered(tmp_path):
    store = SightingStore(tmp_path)
    for i, ts in enumerate([500, 100, 300, 200, 400]):
        store.record_sighting(make_sighting(i, ts))
    out = store.query()
    assert [s.timestamp for s in out] == [100, 200, 300, 400, 500]


def test_absent_attribute_never_matches_equality(tmp_path):
    store = SightingStore(tmp_path)
    store.record_sighting(Sighting(id="s-1", camera_id="c", timestamp=1, color="red"))
    assert store.query(make="toyota") == []


def test_unknown_filter_key_rejected(tmp_path):
    store = SightingStore(tmp_path)
    with pytest.raises(ValueError):
        store.query(wheels="4")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_query_matches_linear_scan_oracle(tmp_path_factory, seed):
    import random

    r = random.Random(seed)
    store = SightingStore(tmp_path_factory.mktemp("q"))
    rows = []
    for i in range(40):
        s = make_sighting(
            i,
            r.randint(1, 1000),
            camera=r.choice(["cam-A", "cam-B", "cam-C"]),
        )
        rows.append(s)
        store.record_sighting(s)

    for _ in range(5):
        kwargs = {}
        if r.random() < 0.5:
            kwargs["ts_from"] = r.randint(1, 900)
        if r.random() < 0.5:
            kwargs["ts_to"] = r.randint(100, 1000)
        if r.random() < 0.4:
            kwargs["cameras"] = [r.choice(["cam-A", "cam-B"])]
        if r.random() < 0.4:
            kwargs["color"] = r.choice(COLORS)
        if r.random() < 0.3:
            kwargs["plate_like"] = r.choice(["KA", "AB0", "99", "XX"])
        got = store.query(**kwargs)
        want = linear_scan_query(rows, **kwargs)
        assert [s.id for s in got] == [s.id for s in want]


# ---------------------------------------------------------------------------
# matching
# ---------------------------------------------------------------------------

def entry_with(**attrs):
    return WatchlistEntry(id="wl-1", created_at=1, **attrs)


def test_all_five_attributes_equal_scores_one():
    s = make_sighting(3, 100)
    e = entry_with(
        make=s.make, model=s.model, color=s.color, plate_text=s.plate_text, plate_type=s.plate_type
    )
    m = score_match(s, e)
    assert m.score == pytest.approx(1.0)
    assert m.attributes_compared == 5
    assert m.matched


def test_partial_attributes_without_plate():
    s = Sighting(id="s", camera_id="c", timestamp=1, make="Toyota", model="Corolla", color="blue")
    e = entry_with(make="toyota", model="corolla", color="BLUE", plate_text="KA01AB1234")
    m = score_match(s, e)
    # plate absent from the sighting: only make+model+color compared
    assert m.attributes_compared == 3
    assert m.score == pytest.approx(1.0)  # (0.15+0.20+0.12)/0.47
    assert m.matched


def test_color_disagrees_hand_arithmetic():
    s = make_sighting(4, 100)
    e = entry_with(make=s.make, model=s.model, plate_text=s.plate_text, color="nonexistent")
    m = score_match(s, e)
    assert m.attributes_compared == 4
    assert m.score == pytest.approx((0.45 + 0.15 + 0.20) / 0.92)
    assert m.matched  # 0.8696 >= 0.75


def test_plate_edit_distance_one_gets_partial_credit():
    s = Sighting(id="s", camera_id="c", timestamp=1, plate_text="KA01AB1234", color="red")
    e = entry_with(plate_text="KA01AB1235", color="red")  # one substitution
    m = score_match(s, e)
    assert m.score == pytest.approx((0.8 * 0.45 + 0.12) / 0.57)


def test_single_attribute_match_is_not_enough():
    s = Sighting(id="s", camera_id="c", timestamp=1, color="red")
    e = entry_with(color="red")
    m = score_match(s, e)
    assert m.score == pytest.approx(1.0)
    assert not m.matched  # needs >= 2 compared attributes


def test_lower_plate_tolerance_never_raises_score():
    s = Sighting(id="s", camera_id="c", timestamp=1, plate_text="KA01AB1234", color="red")
    for plate in ["KA01AB1234", "KA01AB1235", "XX99ZZ0000"]:
        e = entry_with(plate_text=plate, color="red")
        strict = score_match(s, e, plate_tolerance=0)
        loose = score_match(s, e, plate_tolerance=1)
        assert strict.score <= loose.score + 1e-12


def test_match_watchlist_skips_inactive():
    s = make_sighting(5, 100)
    active = entry_with(color=s.color, make=s.make)
    inactive = WatchlistEntry(id="wl-2", created_at=1, color=s.color, make=s.make, active=False)
    scores = match_watchlist(s, [active, inactive])
    assert [m.entry_id for m in scores] == ["wl-1"]


def test_case_insensitive_and_symmetric():
    s = Sighting(id="s", camera_id="c", timestamp=1, plate_text="ka01ab1234", make="TOYOTA")
    e = entry_with(plate_text="KA01AB1234", make="toyota")
    assert score_match(s, e).score == pytest.approx(1.0)


def test_edit_distance_values():
    assert edit_distance("abc", "abc") == 0
    assert edit_distance("abc", "abd") == 1
    assert edit_distance("abc", "ab") == 1
    assert edit_distance("", "xyz") == 3
    assert edit_distance("kitten", "sitting") == 3


# ---------------------------------------------------------------------------
# watchlist crud
# ---------------------------------------------------------------------------

def test_watchlist_add_get_round_trip(tmp_path):
    wl = Watchlist(tmp_path)
    entry = entry_with(plate_text="KA01AB1234")
    wl.add(entry)
    assert wl.get("wl-1").to_json() == entry.to_json()


def test_watchlist_requires_attribute(tmp_path):
    wl = Watchlist(tmp_path)
    with pytest.raises(NoAttributes):
        wl.add(WatchlistEntry(id="wl-9", created_at=1, description="nothing"))


def test_watchlist_update_preserves_identity(tmp_path):
    wl = Watchlist(tmp_path)
    wl.add(entry_with(plate_text="KA01AB1234"))
    updated = wl.update("wl-1", color="red", description="seen again")
    assert updated.id == "wl-1"
    assert updated.created_at == 1
    assert updated.color == "red"
    assert updated.plate_text == "KA01AB1234"


def test_watchlist_deactivate_and_reload(tmp_path):
    wl = Watchlist(tmp_path)
    wl.add(entry_with(plate_text="KA01AB1234"))
    wl.deactivate("wl-1")
    assert wl.entries(active_only=True) == []
    wl.close()
    again = Watchlist(tmp_path)
    assert again.get("wl-1").active is False


def test_watchlist_unknown_entry(tmp_path):
    wl = Watchlist(tmp_path)
    with pytest.raises(UnknownEntry):
        wl.update("missing", color="red")


# ---------------------------------------------------------------------------
# routes
# ---------------------------------------------------------------------------

def route_fixture(tmp_path):
    store = SightingStore(tmp_path)
    wl = Watchlist(tmp_path)
    wl.add(entry_with(make="toyota", model="corolla", color="red"))
    return store, wl


def matched_sighting(i, ts, camera):
    return Sighting(
        id=f"s-{i}",
        camera_id=camera,
        timestamp=ts,
        make="toyota",
        model="corolla",
        color="red",
    )


def test_route_time_ordered_across_cameras(tmp_path):
    store, wl = route_fixture(tmp_path)
    for i, (ts, cam) in enumerate([(3000, "C"), (1000, "A"), (2000, "B")]):
        store.record_sighting(matched_sighting(i, ts, cam))
    waypoints = route("wl-1", store, wl)
    assert [w.camera_id for w in waypoints] == ["A", "B", "C"]
    assert [w.timestamp for w in waypoints] == [1000, 2000, 3000]


def test_route_collapses_dwell_window(tmp_path):
    store, wl = route_fixture(tmp_path)
    store.record_sighting(matched_sighting(0, 1_000, "A"))
    store.record_sighting(matched_sighting(1, 30_000, "A"))  # within 60 s dwell
    store.record_sighting(matched_sighting(2, 200_000, "B"))
    waypoints = route("wl-1", store, wl)
    assert [(w.camera_id, w.timestamp) for w in waypoints] == [("A", 1_000), ("B", 200_000)]


def test_route_dwell_chain_extends(tmp_path):
    # consecutive same-camera hits each within the window of the previous
    store, wl = route_fixture(tmp_path)
    for i, ts in enumerate([1_000, 50_000, 100_000]):
        store.record_sighting(matched_sighting(i, ts, "A"))
    waypoints = route("wl-1", store, wl)
    assert len(waypoints) == 1


def test_route_waypoints_subsequence_of_matches(tmp_path):
    import random

    store, wl = route_fixture(tmp_path)
    r = random.Random(4)
    times = sorted(r.randint(1, 10_000_000) for _ in range(30))
    for i, ts in enumerate(times):
        store.record_sighting(matched_sighting(i, ts, r.choice(["A", "B"])))
    waypoints = route("wl-1", store, wl)
    matched_ids = [s.id for s in store.query()]
    idx = [matched_ids.index(w.sighting_id) for w in waypoints]
    assert idx == sorted(idx)
    wp_times = [w.timestamp for w in waypoints]
    assert wp_times == sorted(wp_times)


def test_route_unknown_entry(tmp_path):
    store, wl = route_fixture(tmp_path)
    with pytest.raises(UnknownEntry):
        route("missing", store, wl)


def test_route_excludes_non_matching(tmp_path):
    store, wl = route_fixture(tmp_path)
    store.record_sighting(matched_sighting(0, 1000, "A"))
    store.record_sighting(
        Sighting(id="s-x", camera_id="B", timestamp=2000, make="honda", model="civic", color="red")
    )
    waypoints = route("wl-1", store, wl)
    assert [w.sighting_id for w in waypoints] == ["s-0"]


# ---------------------------------------------------------------------------
# camera registry
# ---------------------------------------------------------------------------

def test_parse_camera_registry(tmp_path):
    path = tmp_path / "cameras.conf"
    path.write_text(
        "# sites\ncam-A = North Gate, 12.97, 77.59\ncam-B = Toll Booth\n", encoding="utf-8"
    )
    reg = parse_camera_registry(path)
    assert reg["cam-A"].site == "North Gate"
    assert reg["cam-A"].lat == pytest.approx(12.97)
    assert reg["cam-B"].site == "Toll Booth"
    assert reg["cam-B"].lat is None
