"""
Tests for the latent state space layout
"""
import pytest

from welfare_order.errors import DimensionError, InvalidInputError
from welfare_order.models.regimes import Horizon
from welfare_order.models.statespace import ResponseMaps
from welfare_order.utils.statespace import (
    build_layout,
    decode,
    encode,
    layout_to_json,
    observed_cell,
    z_values,
)


def test_layout_sizes(layout_t1, layout_t2):
    """test_layout_sizes
    d_q is exact for T=1 and for the two-period Markov layout
    """
    assert layout_t1.d_q == 16
    assert layout_t2.d_q == 65536
    assert [field.name for field in layout_t2.fields] == ["Y1", "D1", "Y2", "D2"]
    assert layout_t2.field("Y2").args == ("y1", "d2")
    assert layout_t2.field("D2").args == ("y1", "d1", "z2")


def test_layout_without_second_instrument():
    """test_layout_without_second_instrument
    Dropping z2 halves the D2 map
    """
    layout = build_layout(Horizon(periods=2, instrumented=(True, False)), markov=True)
    assert layout.d_q == 2**12
    assert z_values(layout.horizon) == [(0, 0), (1, 0)]


def test_layout_cap():
    """test_layout_cap
    Full-history maps at T=2 exceed the default cap
    """
    with pytest.raises(DimensionError) as error:
        build_layout(Horizon(periods=2), markov=False)
    assert "Markov" in str(error.value)


def test_encode_decode(layout_t1):
    """test_encode_decode
    Maps are stored MSB-first: Y1 occupies the two high bits at T=1
    """
    maps = ResponseMaps(layout=layout_t1, values={"Y1": (0, 1), "D1": (0, 1)})
    assert encode(maps, layout_t1) == 5
    assert decode(5, layout_t1).values == {"Y1": (0, 1), "D1": (0, 1)}


def test_decode_out_of_range(layout_t1):
    """test_decode_out_of_range
    States outside 0..d_q-1 are rejected
    """
    with pytest.raises(InvalidInputError):
        decode(16, layout_t1)


def test_invalid_response_maps(layout_t1):
    """test_invalid_response_maps
    Every map needs one 0/1 entry per argument combination
    """
    with pytest.raises(InvalidInputError):
        ResponseMaps(layout=layout_t1, values={"Y1": (0, 1)})
    with pytest.raises(InvalidInputError):
        ResponseMaps(layout=layout_t1, values={"Y1": (0, 2), "D1": (0, 1)})


def test_observed_cell(layout_t1):
    """test_observed_cell
    A complier with Y(0)=0, Y(1)=1 shows (1, 1) under z=1 and (0, 0) under z=0
    """
    assert observed_cell(5, (1,), layout_t1) == ((1,), (1,))
    assert observed_cell(5, (0,), layout_t1) == ((0,), (0,))
    with pytest.raises(InvalidInputError):
        observed_cell(5, (2,), layout_t1)


def test_layout_json(layout_t2):
    """test_layout_json
    The audit description lists every bit field
    """
    schema = layout_to_json(layout_t2)
    assert schema.d_q == 65536
    assert schema.n_bits == 16
    assert sum(field.width for field in schema.fields) == 16
