import json

import numpy as np
import pytest
from hypothesis import given

from conftest import cgauss
from pentablock import jsonio
from pentablock.block_toeplitz import BlockOp
from strategies import seeds
from test_block_toeplitz import random_blockop


@given(seed=seeds)
def test_matrix_round_trip_is_bit_exact(seed):
    rng = np.random.default_rng(seed)
    M = cgauss(rng, (int(rng.integers(1, 4)), int(rng.integers(1, 4)))) * 10.0 ** rng.integers(-300, 300)
    back = jsonio.decode_matrix(json.loads(json.dumps(jsonio.encode_matrix(M))))
    assert np.array_equal(back, M)


@given(seed=seeds)
def test_blockop_round_trip(seed):
    rng = np.random.default_rng(seed)
    X = random_blockop(rng, int(rng.integers(1, 3)), int(rng.integers(1, 3)), int(rng.integers(0, 3)), int(rng.integers(1, 3)))
    back = jsonio.decode_operator(json.loads(jsonio.dumps(X)))
    assert back.equals(X, 0.0)


def test_scalar_shorthand_and_pairs():
    ops = jsonio.decode_triple({"a": 0.5, "s": [1, 2], "p": 0})
    assert ops[1][0, 0] == 1 + 2j and all(X.shape == (1, 1) for X in ops)


def test_non_finite_values_are_strings():
    text = jsonio.dumps({"x": float("inf"), "z": complex(float("nan"), 1)})
    assert json.loads(text) == {"x": "inf", "z": ["nan", 1.0]}


@pytest.mark.parametrize(
    "obj",
    [
        {"A": {"rows": 2, "cols": 2, "data": [[1, 2]]}, "S": [[0]], "P": [[0]]},
        {"A": [[1]], "S": [[0]]},
        {"A": [["x"]], "S": [[0]], "P": [[0]]},
        {"A": {"m": 1}, "S": [[0]], "P": [[0]]},
    ],
)
def test_schema_errors(obj):
    with pytest.raises(jsonio.SchemaError):
        jsonio.decode_triple(obj)


def test_mixing_blockops_and_matrices_rejected():
    obj = {"A": jsonio.encode_blockop(BlockOp.shift(1, 1)), "S": [[0]], "P": [[0]]}
    with pytest.raises(jsonio.SchemaError):
        jsonio.decode_triple(obj)
