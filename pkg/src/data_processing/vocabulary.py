"""
Token <-> id mapping with a reserved padding id
"""

from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

from src.data_processing.pose import TokenSequence
from src.errors import CorpusParseError, VocabularyError

PAD_TOKEN = "<pad>"
PAD_ID = 0


class Vocabulary:
    """Dense ids; id 0 is always the padding token"""

    def __init__(self, tokens: Iterable[str] = ()):
        self._id_to_token: List[str] = [PAD_TOKEN]
        self._token_to_id: Dict[str, int] = {PAD_TOKEN: PAD_ID}
        for token in tokens:
            self.add(token)

    def add(self, token: str) -> int:
        if token in self._token_to_id:
            return self._token_to_id[token]
        if not token or any(ch.isspace() for ch in token):
            raise VocabularyError("tokens must be non-empty and contain no whitespace", [repr(token)])
        self._token_to_id[token] = len(self._id_to_token)
        self._id_to_token.append(token)
        return self._token_to_id[token]

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    @property
    def tokens(self) -> List[str]:
        """Corpus words, padding excluded"""
        return self._id_to_token[1:]

    def encode(self, words: Union[str, Sequence[str]]) -> TokenSequence:
        """
        Map words to ids

        Args:
            words: A whitespace separated string or a list of tokens

        Raises:
            VocabularyError: listing every unknown token
        """
        if isinstance(words, str):
            words = words.split()
        unknown = [w for w in words if w not in self._token_to_id or w == PAD_TOKEN]
        if unknown:
            raise VocabularyError("unknown tokens", unknown)
        return tuple(self._token_to_id[w] for w in words)

    def decode(self, ids: Sequence[int]) -> List[str]:
        self.check_ids(ids)
        return [self._id_to_token[i] for i in ids]

    def check_ids(self, ids: Sequence[int]) -> None:
        bad = [i for i in ids if not 0 <= int(i) < len(self)]
        if bad:
            raise VocabularyError(f"ids outside vocabulary of size {len(self)}", bad)

    def save(self, path: Union[str, Path]) -> Path:
        """One token per line; the line number is the id"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self._id_to_token) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabulary":
        path = Path(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != PAD_TOKEN:
            raise CorpusParseError(f"first line must be {PAD_TOKEN}", 1, str(path))
        vocab = cls()
        for number, token in enumerate(lines[1:], start=2):
            if token in vocab:
                raise CorpusParseError(f"duplicate token {token!r}", number, str(path))
            try:
                vocab.add(token)
            except VocabularyError as e:
                raise CorpusParseError(str(e), number, str(path)) from e
        return vocab

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._id_to_token == other._id_to_token
