# Copyright (c) 2026, the dpsd authors
import logging
import typing
from os import PathLike
from pathlib import Path, PurePath
from dpsd.bitstring.packed_bit_string import PackedBitString, BitStringError, parse_line


class RaggedCorpusError(BitStringError):
    def __init__(self, line_number: int, expected: int, actual: int):
        super(RaggedCorpusError, self).__init__(
            f"Line {line_number} has length {actual}, but the corpus strings have length {expected}")
        self.line_number = line_number
        self.expected = expected
        self.actual = actual


class CorpusLineError(BitStringError):
    def __init__(self, line_number: int, cause: BitStringError):
        super(CorpusLineError, self).__init__(f"Line {line_number}: {cause}")
        self.line_number = line_number
        self.cause = cause


def read_corpus(path: typing.Union[str, PathLike, PurePath]) -> typing.List[PackedBitString]:
    """
    Read a corpus file: UTF-8 text, one string of '0'/'1' per line, all the same length.
    A single trailing newline at the end of the file is allowed, but no other whitespace.
    :param path: The file to read
    :return: The strings, in file order
    """
    path = Path(path)
    with path.open('r', encoding='utf-8', newline='') as corpus_file:
        text = corpus_file.read()
    strings = parse_corpus(text)
    logging.getLogger(__name__).debug(f"Read {len(strings)} strings from {path}")
    return strings


def parse_corpus(text: str) -> typing.List[PackedBitString]:
    """
    Parse the contents of a corpus file.
    :param text:
    :return:
    """
    if text.endswith('\n'):
        text = text[:-1]
    if len(text) <= 0:
        return []
    strings = []
    expected_length = None
    for line_idx, line in enumerate(text.split('\n')):
        try:
            bit_string = parse_line(line)
        except BitStringError as err:
            raise CorpusLineError(line_idx + 1, err) from err
        if expected_length is None:
            expected_length = bit_string.length
        elif bit_string.length != expected_length:
            raise RaggedCorpusError(line_idx + 1, expected_length, bit_string.length)
        strings.append(bit_string)
    return strings


def write_corpus(path: typing.Union[str, PathLike, PurePath], strings: typing.Iterable[PackedBitString]) -> None:
    """
    Write strings one per line, newline terminated.
    :param path:
    :param strings:
    :return:
    """
    path = Path(path)
    with path.open('w', encoding='utf-8', newline='\n') as corpus_file:
        for bit_string in strings:
            corpus_file.write(str(bit_string))
            corpus_file.write('\n')
