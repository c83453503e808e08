import struct
import zlib

import numpy as np
import pytest

from deig.config.constants import CHECKPOINT_MAGIC
from deig.core.commons.errors import CheckpointError
from deig.core.tensor.checkpoint import (
    decode_json_entry,
    dumps,
    encode_json_entry,
    load_checkpoint,
    loads,
    save_checkpoint,
)


def _reseal(body: bytes) -> bytes:
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


@pytest.mark.unit
@pytest.mark.kernel
class TestCheckpointCodec:
    @pytest.fixture
    def entries(self, rng):
        return {
            "layers.0.w_q.weight": rng.normal(size=(3, 4)),
            "gamma": np.zeros(1),
            "scalar": np.array(2.5),
        }

    def test_round_trip_is_bit_exact(self, entries):
        restored = loads(dumps(entries))

        assert list(restored) == list(entries)
        for name, array in entries.items():
            assert restored[name].shape == array.shape
            assert restored[name].tobytes() == np.asarray(array, dtype="<f8").tobytes()

    def test_blob_starts_with_magic(self, entries):
        assert dumps(entries).startswith(CHECKPOINT_MAGIC)

    def test_flipped_byte_fails_crc(self, entries):
        blob = bytearray(dumps(entries))
        blob[20] ^= 0xFF

        with pytest.raises(CheckpointError, match="CRC32"):
            loads(bytes(blob))

    def test_truncated_blob(self, entries):
        with pytest.raises(CheckpointError):
            loads(dumps(entries)[:10])

    def test_bad_magic(self, entries):
        body = dumps(entries)[:-4]

        with pytest.raises(CheckpointError, match="magic"):
            loads(_reseal(b"NOTACKPT" + body[len(CHECKPOINT_MAGIC) :]))

    def test_unsupported_version(self, entries):
        body = bytearray(dumps(entries)[:-4])
        struct.pack_into("<I", body, len(CHECKPOINT_MAGIC), 99)

        with pytest.raises(CheckpointError, match="version 99"):
            loads(_reseal(bytes(body)))

    def test_trailing_bytes(self, entries):
        with pytest.raises(CheckpointError, match="Trailing"):
            loads(_reseal(dumps(entries)[:-4] + b"\x00\x00"))

    def test_json_entry_round_trip(self):
        document = {"ide": {"s": 16}, "tokens": ["<pad>", "red"]}

        assert decode_json_entry(encode_json_entry(document)) == document

    def test_json_entry_rejects_non_bytes(self):
        with pytest.raises(CheckpointError):
            decode_json_entry(np.array([300.0, 1.5]))

    def test_save_and_load_file(self, entries, tmp_path):
        path = save_checkpoint(tmp_path / "nested" / "model.ckpt", entries)

        restored = load_checkpoint(path)

        np.testing.assert_array_equal(restored["layers.0.w_q.weight"], entries["layers.0.w_q.weight"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            load_checkpoint(tmp_path / "absent.ckpt")
