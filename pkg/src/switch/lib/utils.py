"""Module containing utility function for the switch simulator"""
from typing import Callable, List, NamedTuple, Union

import numpy as np

Number = Union[int, float]


class RandomStreams(NamedTuple):
    """Independent random streams of one simulation run"""

    arrivals: np.random.Generator
    flow_sizes: np.random.Generator
    policy: np.random.Generator
    tuning: np.random.Generator


def make_streams(seed: int) -> RandomStreams:
    """
    Creates one counter-based (Philox) generator per purpose from a single seed.

    Arrival counts, flow sizes and policy randomness never share a stream, so
    comparing two policies under the same seed replays the same arrival path.

    Args:
        seed (int): 64-bit run seed.

    Returns:
        RandomStreams: arrivals, flow_sizes, policy and tuning generators.
    """
    children = np.random.SeedSequence(seed).spawn(4)
    return RandomStreams(*[np.random.Generator(np.random.Philox(c)) for c in children])


def parse_list_string(list_string: str, cast: Callable[[str], Number] = int) -> List[Number]:
    """
    Parses a string representation of a list of numbers, separated by commas,
    into a Python list.

    Args:
        list_string (str): A string representation of a list, e.g. "16,32,64".
        cast (Callable): Conversion applied to every item, defaults to int.

    Returns:
        list: A list of numbers parsed from the input string, e.g. [16, 32, 64].
    """
    out_list = [item.strip() for item in list_string.split(",")]
    if any(item == "" for item in out_list):
        raise ValueError(f"Empty item in list string: {list_string!r}")
    return [cast(item) for item in out_list]
