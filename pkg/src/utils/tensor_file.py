"""
Codec des fichiers tenseurs `.ten`

Disposition (little-endian) : magic `VSTN`, u8 dtype (0=f32, 1=i32, 2=u8),
u8 rang, rang x u32 dimensions, puis la charge utile en ordre row-major.
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from src.utils.errors import DatasetFormatError

MAGIC = b'VSTN'

# code dtype -> dtype numpy little-endian
DTYPE_CODES = {
    0: np.dtype('<f4'),
    1: np.dtype('<i4'),
    2: np.dtype('u1'),
}
_CODE_BY_KIND = {'f': 0, 'i': 1, 'u': 2, 'b': 2}


def dtype_code(array: np.ndarray) -> int:
    """Code dtype utilisé pour sérialiser un tableau (float -> f32, int -> i32, bool/u8 -> u8)"""
    kind = array.dtype.kind
    if kind == 'u' and array.dtype.itemsize > 1:
        return 1
    if kind not in _CODE_BY_KIND:
        raise DatasetFormatError(f"dtype non sérialisable: {array.dtype}")
    return _CODE_BY_KIND[kind]


def encode_tensor(array: np.ndarray) -> bytes:
    """
    Sérialise un tableau numpy au format `.ten`

    Args:
        array: Tableau à sérialiser (rang <= 255)

    Returns:
        Octets du fichier
    """
    array = np.asarray(array)
    code = dtype_code(array)
    payload = np.ascontiguousarray(array, dtype=DTYPE_CODES[code])
    header = struct.pack('<4sBB', MAGIC, code, payload.ndim)
    dims = struct.pack(f'<{payload.ndim}I', *payload.shape)
    return header + dims + payload.tobytes(order='C')


def decode_tensor(data: bytes, source: str = '<bytes>') -> np.ndarray:
    """
    Désérialise des octets `.ten` en tableau numpy (ordre d'octets natif)

    Args:
        data: Contenu du fichier
        source: Nom utilisé dans les messages d'erreur

    Returns:
        Tableau numpy

    Raises:
        DatasetFormatError: Si l'en-tête ou la taille de la charge utile est invalide
    """
    if len(data) < 6:
        raise DatasetFormatError(f"{source}: fichier tenseur tronqué")
    magic, code, rank = struct.unpack_from('<4sBB', data, 0)
    if magic != MAGIC:
        raise DatasetFormatError(f"{source}: magic invalide {magic!r}")
    if code not in DTYPE_CODES:
        raise DatasetFormatError(f"{source}: code dtype inconnu {code}")

    offset = 6 + 4 * rank
    if len(data) < offset:
        raise DatasetFormatError(f"{source}: dimensions tronquées")
    shape = struct.unpack_from(f'<{rank}I', data, 6)

    dtype = DTYPE_CODES[code]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(data) - offset != expected:
        raise DatasetFormatError(
            f"{source}: charge utile de {len(data) - offset} octets, {expected} attendus"
        )
    array = np.frombuffer(data, dtype=dtype, offset=offset).reshape(shape)
    return array.astype(dtype.newbyteorder('='))


def write_tensor(path: Union[str, Path], array: np.ndarray) -> None:
    """Écrit un tableau dans un fichier `.ten`"""
    Path(path).write_bytes(encode_tensor(array))


def read_tensor(path: Union[str, Path]) -> np.ndarray:
    """Lit un fichier `.ten`"""
    path = Path(path)
    if not path.exists():
        raise DatasetFormatError(f"fichier tenseur absent: {path}")
    return decode_tensor(path.read_bytes(), source=str(path))


__all__ = [
    'MAGIC',
    'DTYPE_CODES',
    'encode_tensor',
    'decode_tensor',
    'write_tensor',
    'read_tensor',
]
