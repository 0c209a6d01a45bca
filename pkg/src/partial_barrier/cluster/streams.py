"""Named random streams split from one root seed."""
import hashlib
from typing import Dict, Tuple

from numpy.random import PCG64, Generator, SeedSequence


def _name_key(name: str) -> int:
    # stable across processes, unlike the salted builtin hash()
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:4], "big")


class StreamFactory:
    """Hands out independent generators keyed by (name, *index).

    Adding a new stream name never shifts the draws of existing ones.
    """

    def __init__(self, root_seed: int) -> None:
        self.root_seed = int(root_seed)
        self._issued: Dict[Tuple, SeedSequence] = {}

    def seed_sequence(self, name: str, *index: int) -> SeedSequence:
        key = (name, *index)
        if key not in self._issued:
            self._issued[key] = SeedSequence(
                entropy=self.root_seed,
                spawn_key=(_name_key(name), *[int(i) for i in index]),
            )
        return self._issued[key]

    def generator(self, name: str, *index: int) -> Generator:
        return Generator(PCG64(self.seed_sequence(name, *index)))


def make_rng(root_seed: int, name: str, *index: int) -> Generator:
    return StreamFactory(root_seed).generator(name, *index)
