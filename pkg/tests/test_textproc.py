import numpy as np
import pytest

from threadtriage.errors import DataError
from threadtriage.textproc import (
    CategoryLexicon,
    SentimentLexicon,
    category_rates,
    is_numeric_token,
    load_dic,
    load_sentiment_csv,
    sentiment_score,
    tokenize,
)

from util import brute_force_category_rates

DIC = """%
1\tfamily
2\tswear
%
mother*\t1
family\t1
damn\t2
"""


class TestTokenize:
    def test_lowercase_and_punctuation(self):
        assert tokenize("I'm SCARED, anymore!!") == ["i'm", "scared", "anymore"]

    def test_empty(self):
        assert tokenize("") == []

    def test_numeric_tagging(self):
        tokens = tokenize("in 2016.")
        assert tokens == ["in", "2016"]
        assert [is_numeric_token(t) for t in tokens] == [False, True]

    def test_apostrophes_internal_only(self):
        assert tokenize("'em y'all's 'quote'") == ["em", "y'all's", "quote"]

    def test_idempotent_on_own_output(self):
        rng = np.random.default_rng(1)
        pieces = ["I'm", "2016", "Fine?!", "don't--stop", "a_b", "..", "Hello World"]
        for _ in range(30):
            text = " ".join(rng.choice(pieces, size=5))
            tokens = tokenize(text)
            assert tokenize(" ".join(tokens)) == tokens


class TestLoadDic:
    def test_parses_exact_and_prefix(self):
        lex = load_dic(DIC.splitlines())
        assert lex.categories == ((1, "family"), (2, "swear"))
        assert lex.exact_entries == {"family": {1}, "damn": {2}}
        assert lex.prefix_entries == {"mother": {1}}

    def test_undeclared_category_rejected(self):
        bad = DIC + "xyz\t9\n"
        with pytest.raises(DataError, match="undeclared category 9"):
            load_dic(bad.splitlines())

    def test_duplicate_category_id_rejected(self):
        bad = "%\n1\tfamily\n1\tswear\n%\n"
        with pytest.raises(DataError, match="duplicate category id"):
            load_dic(bad.splitlines())

    def test_empty_entry_section_is_valid(self):
        lex = load_dic("%\n1\tfamily\n%\n".splitlines())
        assert lex.n_categories == 1
        assert np.array_equal(category_rates(["anything"], lex), np.zeros(1))

    def test_comments_and_blank_lines_ignored(self):
        text = "# note\n\n%\n1\tfamily\n%\n# more\nmother*\t1\n"
        lex = load_dic(text.splitlines())
        assert lex.prefix_entries == {"mother": {1}}


class TestCategoryRates:
    def lexicon(self):
        return load_dic(DIC.splitlines())

    def test_hand_example(self):
        rates = category_rates(["my", "mother's", "family", "damn"], self.lexicon())
        assert rates == pytest.approx([0.5, 0.25])

    def test_empty_tokens(self):
        assert np.array_equal(category_rates([], self.lexicon()), np.zeros(2))

    def test_exact_beats_prefix(self):
        text = "%\n1\tfamily\n2\tplace\n%\nmother*\t1\nmotherland\t2\n"
        lex = load_dic(text.splitlines())
        assert category_rates(["motherland"], lex) == pytest.approx([0.0, 1.0])

    def test_longest_prefix_wins(self):
        text = "%\n1\tshort\n2\tlong\n%\nmo*\t1\nmother*\t2\n"
        lex = load_dic(text.splitlines())
        assert category_rates(["mothers"], lex) == pytest.approx([0.0, 1.0])
        assert category_rates(["most"], lex) == pytest.approx([1.0, 0.0])

    def test_rates_bounded(self):
        rng = np.random.default_rng(5)
        lex = self.lexicon()
        words = ["mother", "mothers", "family", "damn", "other", "mote"]
        for _ in range(20):
            tokens = list(rng.choice(words, size=int(rng.integers(1, 12))))
            rates = category_rates(tokens, lex)
            assert ((rates >= 0) & (rates <= 1)).all()

    def test_matches_brute_force_on_random_lexicons(self):
        rng = np.random.default_rng(9)
        alphabet = list("abc")
        for _ in range(40):
            n_cats = int(rng.integers(1, 4))
            lines = ["%"] + [f"{c + 1}\tcat{c + 1}" for c in range(n_cats)] + ["%"]
            for _ in range(int(rng.integers(1, 8))):
                word = "".join(rng.choice(alphabet, size=int(rng.integers(1, 4))))
                star = "*" if rng.random() < 0.5 else ""
                cats = sorted(set(rng.integers(1, n_cats + 1, size=int(rng.integers(1, 3)))))
                lines.append(word + star + "\t" + "\t".join(str(c) for c in cats))
            try:
                lex = load_dic(lines)
            except DataError:
                continue  # duplicate-name draws are not the point here
            tokens = ["".join(rng.choice(alphabet, size=int(rng.integers(1, 5))))
                      for _ in range(int(rng.integers(0, 10)))]
            assert category_rates(tokens, lex) == pytest.approx(
                brute_force_category_rates(tokens, lex)
            )


class TestSentiment:
    def lexicon(self):
        return SentimentLexicon(entries={"great": (0.8, 0.75), "scared": (-0.6, 1.0)})

    def test_mean_over_matches(self):
        assert sentiment_score(["great", "scared"], self.lexicon()) == pytest.approx(
            (0.1, 0.875)
        )

    def test_no_matches(self):
        assert sentiment_score(["missing"], self.lexicon()) == (0.0, 0.0)

    def test_repeated_token_mean(self):
        assert sentiment_score(["great", "great"], self.lexicon()) == pytest.approx(
            (0.8, 0.75)
        )

    def test_scores_stay_in_range(self):
        rng = np.random.default_rng(2)
        entries = {
            f"w{i}": (float(rng.uniform(-1, 1)), float(rng.uniform(0, 1))) for i in range(20)
        }
        lex = SentimentLexicon(entries=entries)
        words = list(entries) + ["unknown"]
        for _ in range(30):
            tokens = list(rng.choice(words, size=int(rng.integers(1, 15))))
            polarity, subjectivity = sentiment_score(tokens, lex)
            assert -1.0 <= polarity <= 1.0
            assert 0.0 <= subjectivity <= 1.0

    def test_csv_loader_validates(self, tmp_path):
        good = tmp_path / "s.csv"
        good.write_text("token,polarity,subjectivity\ngreat,0.8,0.75\n")
        lex = load_sentiment_csv(good)
        assert lex.entries == {"great": (0.8, 0.75)}
        bad = tmp_path / "bad.csv"
        bad.write_text("token,polarity,subjectivity\nx,2.0,0.5\n")
        with pytest.raises(DataError, match="polarity"):
            load_sentiment_csv(bad)
        noheader = tmp_path / "nh.csv"
        noheader.write_text("great,0.8,0.75\n")
        with pytest.raises(DataError, match="header"):
            load_sentiment_csv(noheader)
