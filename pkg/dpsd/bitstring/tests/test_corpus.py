import unittest
import os.path
import tempfile
from dpsd.bitstring.packed_bit_string import parse_line, InvalidCharacterError
from dpsd.bitstring.corpus import RaggedCorpusError, CorpusLineError, parse_corpus, read_corpus, write_corpus


class TestCorpus(unittest.TestCase):

    def test_parse_corpus(self):
        strings = parse_corpus('0101\n1110\n')
        self.assertEqual([parse_line('0101'), parse_line('1110')], strings)

    def test_parse_corpus_without_trailing_newline(self):
        self.assertEqual(2, len(parse_corpus('01\n10')))

    def test_empty_corpus(self):
        self.assertEqual([], parse_corpus(''))
        self.assertEqual([], parse_corpus('\n'))

    def test_ragged_corpus_names_line(self):
        with self.assertRaises(RaggedCorpusError) as context:
            parse_corpus('0101\n111\n')
        self.assertEqual(2, context.exception.line_number)
        self.assertEqual(4, context.exception.expected)
        self.assertEqual(3, context.exception.actual)

    def test_bad_line_names_line_and_cause(self):
        with self.assertRaises(CorpusLineError) as context:
            parse_corpus('0101\n01 1\n')
        self.assertEqual(2, context.exception.line_number)
        self.assertIsInstance(context.exception.cause, InvalidCharacterError)

    def test_blank_line_in_the_middle_is_an_error(self):
        with self.assertRaises(CorpusLineError):
            parse_corpus('01\n\n10\n')

    def test_write_then_read(self):
        strings = [parse_line('0011'), parse_line('1010'), parse_line('1111')]
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, 'corpus.txt')
            write_corpus(path, strings)
            with open(path, 'r') as corpus_file:
                self.assertEqual('0011\n1010\n1111\n', corpus_file.read())
            self.assertEqual(strings, read_corpus(path))
