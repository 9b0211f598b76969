import random

import pytest
from hypothesis import given, settings, strategies as st

from routerev.errors import EmptyResponse, UnparseableLine
from routerev.geo import GeoPoint, Polyline, angular_difference, destination_point
from routerev.instructions import (ARRIVAL_LINE, COMPASS16, DEFAULT_BANDS, OPPOSITE_COMPASS, REPRESENTATIVE_DEFLECTION,
                                   Arrive, Continue, Depart, Face, Turn, TurnBands, TurnClass, classify_turn,
                                   command_signature, compass_word, is_canonical, normalize_line, normalize_text,
                                   parse_instruction, parse_instructions, render_commands, render_instructions,
                                   render_line)
from routerev.pathbuilder import dead_reckon

# --- turn classification ------------------------------------------------------


@pytest.mark.parametrize("d,cls", [
    (0, TurnClass.STRAIGHT), (10.9, TurnClass.STRAIGHT), (-10.9, TurnClass.STRAIGHT),
    (11, TurnClass.SLIGHT_RIGHT), (-11, TurnClass.SLIGHT_LEFT), (44.9, TurnClass.SLIGHT_RIGHT),
    (45, TurnClass.RIGHT), (-135.9, TurnClass.LEFT), (136, TurnClass.SHARP_RIGHT),
    (170, TurnClass.SHARP_RIGHT), (-170, TurnClass.SHARP_LEFT), (170.1, TurnClass.U_TURN), (180, TurnClass.U_TURN),
])
def test_band_edges(d, cls):
    assert classify_turn(d) is cls


@given(st.floats(-180, 180))
def test_band_sweep_is_monotone_and_symmetric(d):
    order = [TurnClass.STRAIGHT, TurnClass.SLIGHT_RIGHT, TurnClass.RIGHT, TurnClass.SHARP_RIGHT, TurnClass.U_TURN]
    c = classify_turn(d)
    m = classify_turn(-d)
    if c is not TurnClass.U_TURN and d != 0:
        assert m is c.mirrored
    mag = abs(d)
    right = classify_turn(mag) if mag < 180 else TurnClass.U_TURN
    bigger = classify_turn(min(180.0, mag + 1.0))
    assert order.index(bigger) >= order.index(right)


def test_custom_bands():
    b = TurnBands(straight=5, slight=30, plain=120, sharp=160)
    assert classify_turn(8, b) is TurnClass.SLIGHT_RIGHT
    assert classify_turn(8) is TurnClass.STRAIGHT


def test_mirrored_and_opposites():
    assert TurnClass.SLIGHT_LEFT.mirrored is TurnClass.SLIGHT_RIGHT
    assert TurnClass.U_TURN.mirrored is TurnClass.U_TURN
    for w, b in COMPASS16.items():
        assert angular_difference(COMPASS16[OPPOSITE_COMPASS[w]], b) == 180


@pytest.mark.parametrize("tok,word", [("North East", "northeast"), ("NE", "northeast"), ("north-east", "northeast"),
                                      ("westbound", "west"), ("SSW", "south-southwest"), ("up", None)])
def test_compass_word(tok, word):
    assert compass_word(tok) == word


# --- canonical lines ------------------------------------------------------------


def test_render_line_forms():
    assert render_line(Depart(270, "west"), Continue(75.9)) == "Head west, continue for 75.9 meters."
    assert render_line(Turn(TurnClass.KEEP_RIGHT), Continue(91.7, "Queen Street")) == \
        "Keep right, along Queen Street, continue for 91.7 meters."
    assert render_line(Turn(TurnClass.U_TURN), None) == "Make a U-turn."
    assert render_line(None, Continue(5)) == "Continue for 5.0 meters."
    assert render_line(Depart(100.0), Continue(5)) == "Head 100 degrees, continue for 5.0 meters."


def test_parse_round_trip_of_every_form():
    cmds = [Depart(90.0, "east"), Continue(120.0), Turn(TurnClass.SLIGHT_LEFT), Continue(30.5),
            Turn(TurnClass.SHARP_RIGHT), Continue(12.0, "King St"), Turn(TurnClass.U_TURN), Continue(2.5),
            Turn(TurnClass.KEEP_LEFT), Continue(7.0), Continue(3.0), Arrive()]
    lines = render_commands(cmds)
    assert all(is_canonical(s) for s in lines)
    back = [c for s in lines for c in parse_instruction(s)]
    assert back == cmds
    assert back[5].street == "King St"


def test_unparseable_line():
    with pytest.raises(UnparseableLine):
        parse_instruction("Fly to the moon.")


def test_signatures():
    assert command_signature(Depart(90.0, "east")) == "Depart(east)"
    assert command_signature(Continue(3.25)) in ("Continue(3.2)", "Continue(3.3)")
    assert command_signature(Arrive()) == "Arrive"


# --- normalizer -------------------------------------------------------------------


@pytest.mark.parametrize("raw,want", [
    ("1. **Head North** on King St for 200 m", "Head north, along King St, continue for 200.0 meters."),
    ("Bear right onto Queen Street and go 1.2 km",
     "Turn slight right, along Queen Street, continue for 1200.0 meters."),
    ("Go NE for 300 ft", "Head northeast, continue for 91.4 meters."),
    ("head 100° for 50 m", "Head 100 degrees, continue for 50.0 meters."),
    ("Walk northbound 100 yards", "Head north, continue for 91.4 meters."),
    ("Veer left for 50 m", "Turn slight left, continue for 50.0 meters."),
    ("Turn left at the gas station and continue for 100 meters", "Turn left, continue for 100.0 meters."),
    ("You have arrived at your destination", ARRIVAL_LINE),
    ("Drive east 1,200 m; then turn slightly left", "Head east, continue for 1200.0 meters.\nTurn slight left."),
    ("Travel west along Bloor St for 300 meters, then turn hard right.",
     "Head west, along Bloor St, continue for 300.0 meters.\nTurn sharp right."),
])
def test_normalize_examples(raw, want):
    assert normalize_line(raw).text == want


def test_normalizer_annotates_landmarks():
    n = normalize_line("Head south past the park (near the museum) for 200m")
    assert n.text == "Head south, continue for 200.0 meters."
    assert n.annotations


def test_canonical_lines_are_fixed_points():
    for s in ["Head west, continue for 75.9 meters.", ARRIVAL_LINE, "Continue straight.",
              "Keep right, along Queen Street, continue for 91.7 meters."]:
        assert normalize_line(s).text == s


def _fuzz_corpus(n=200, seed=42):
    rng = random.Random(seed)
    verbs = ["Head", "Go", "Walk", "Drive", "Proceed", "Travel", "head", "GO"]
    dirs = ["north", "South", "NE", "north-west", "East", "westbound", "SW", "north east"]
    turns = ["Turn left", "turn right", "Bear right", "Veer left", "Turn slightly left", "Take a sharp right",
             "Make a U-turn", "Keep left", "keep right", "Turn hard left"]
    dists = ["100 m", "1.5 km", "250 meters", "300 ft", "0.2 mi", "1,200 m", "75.9 meters", "40 yards"]
    streets = ["", " onto King St", " along Queen Street", " on Main Ave"]
    extras = ["", " past the park", " (near the church)", " at the second light", "."]
    noise = ["I think you should", "Here is the route:", "**", "Sure!", "Then", "Finally,"]
    out = []
    for i in range(n):
        k = rng.randrange(6)
        if k == 0:
            s = f"{rng.choice(verbs)} {rng.choice(dirs)}{rng.choice(streets)} for {rng.choice(dists)}"
        elif k == 1:
            s = f"{rng.choice(turns)}{rng.choice(streets)} and continue for {rng.choice(dists)}"
        elif k == 2:
            s = f"After {rng.choice(dists)}, {rng.choice(turns).lower()}"
        elif k == 3:
            s = f"{rng.choice(turns)}{rng.choice(extras)}; then go {rng.choice(dists)}"
        elif k == 4:
            s = f"{rng.choice(noise)} {rng.choice(verbs).lower()} {rng.choice(dirs)} {rng.choice(dists)}"
        else:
            s = rng.choice(["Arrive at your destination", "You have arrived.", "Continue straight",
                            "zzz qqq", "Go back the way you came", "Continue for a while"])
        if rng.random() < 0.3:
            s = f"{i % 9 + 1}. {s}"
        out.append(s + rng.choice(extras))
    return out


CORPUS = _fuzz_corpus()


def test_corpus_size():
    assert len(CORPUS) == 200


@pytest.mark.parametrize("i", range(0, 200, 1))
def test_normalize_is_idempotent(i):
    once = normalize_text(CORPUS[i])
    assert normalize_text(once) == once


@given(st.text(max_size=120))
@settings(max_examples=200)
def test_normalize_idempotent_on_arbitrary_text(s):
    once = normalize_text(s)
    assert normalize_text(once) == once


# --- parse_instructions ------------------------------------------------------------


def test_parse_instructions_diagnostics():
    text = "Here is your route:\nStart Point: 43°38'47''N, 79°26'11.5''W\n1. Head east for 100 m\n" \
           "2. Turn left, continue for 50 meters\n3. Hmm, not sure\n4. Head north for 20 m"
    r = parse_instructions(text)
    d = r.diagnostics
    assert d.n_lines == 4 and len(d.unparseable) == 1 and len(d.skipped) == 2
    assert not d.missing_initial_absolute_direction
    assert isinstance(r.commands[-2], Face)
    assert d.n_continue == 3


def test_missing_initial_direction_flag():
    d = parse_instructions("Turn left, continue for 30 meters.").diagnostics
    assert d.missing_initial_absolute_direction


def test_empty_response():
    with pytest.raises(EmptyResponse):
        parse_instructions("   \n ")


# --- renderer ------------------------------------------------------------------------


def _route(start, legs):
    pts = [start]
    for b, d in legs:
        pts.append(destination_point(pts[-1], b, d))
    return Polyline(pts)


def test_render_simple_route(origin):
    r = _route(origin, [(0, 300), (90, 200), (60, 100)])
    lines = render_instructions(r).lines
    assert lines[0] == "Head north, continue for 300.0 meters."
    assert lines[1] == "Turn right, continue for 200.0 meters."
    assert lines[2].startswith("Turn slight left, continue for ")
    assert lines[-1] == ARRIVAL_LINE


def test_render_path_mode_states_run_lengths(origin):
    r = _route(origin, [(0, 300), (5, 100), (90, 200)])
    lines = render_instructions(r, distance_mode="path").lines
    assert lines[0] == "Head north, continue for 400.0 meters."


def test_small_kinks_accumulate(origin):
    # four 8-degree kinks are each below the straight band but sum past it
    legs = [(0, 100)] + [(8 * k, 100) for k in range(1, 5)]
    iset = render_instructions(_route(origin, legs))
    assert iset.n_turns >= 1


HEADINGS = st.sampled_from([0.0, 45.0, 90.0, 135.0, 180.0, 225.0, 270.0, 315.0])
TURNS = st.sampled_from([t for t in TurnClass if t is not TurnClass.STRAIGHT])


@given(HEADINGS, st.lists(TURNS, min_size=1, max_size=4))
def test_heading_is_sum_of_representative_turns(h, turns):
    cmds = [Depart(h), Continue(10.0)]
    for t in turns:
        cmds += [Turn(t), Continue(10.0)]
    state = dead_reckon(cmds, GeoPoint(43.65, -79.38))
    want = h + sum(REPRESENTATIVE_DEFLECTION[t] for t in turns)
    assert angular_difference(state.heading, want) < 1e-9


def test_default_bands_are_documented_values():
    assert DEFAULT_BANDS == TurnBands(11, 45, 136, 170)


@pytest.mark.parametrize("raw,want", [
    ("After 200 m heading north, turn left.", "Head north, continue for 200.0 meters.\nTurn left."),
    ("Walk west 100 m, make a U-turn, walk 30 m",
     "Head west, continue for 100.0 meters.\nMake a U-turn, continue for 30.0 meters."),
])
def test_second_maneuver_after_comma_kept(raw, want):
    assert normalize_text(raw) == want
