"""Exercises the extension module end to end against a throwaway store."""

import tempfile

import tulun


def main():
    with tempfile.TemporaryDirectory() as d:
        store = tulun.Store(d)
        store.update_config({
            "target_language_name": "Bislama",
            "mt_backend": {"kind": "mock", "mock_translations": {
                "Is this water potable?": "?Wota ia i gud blong dring?"}},
            "llm_backend": {"kind": "mock", "mock_rules": [
                {"find": "gud blong dring", "replace": "stret blong dring"}]},
        })
        store.put_glossary_entry("water", "wota")
        report = store.import_csv("tm", "source_text,target_text\n"
                                  "Is the tank water potable?,?Wota blong tank i stret blong dring?\n"
                                  ",missing source\n")
        assert report["inserted"] == 1, report
        assert [r["line"] for r in report["rejected"]] == [3], report

        engine = tulun.Engine(store)
        result = engine.translate("Is this water potable?")
        text = result["post_edited_text"]
        assert text == "?Wota ia i stret blong dring?", text
        start, end = result["ape_diff_spans"][0]["start"], result["ape_diff_spans"][0]["end"]
        assert text.encode()[start:end] == b"stret"
        assert result["glossary_matches"][0]["entry"]["target_text"] == "wota"

        saved = engine.save_to_tm(result["source_text"], text)
        assert store.retrieve_tm("Is this water potable?")[0]["entry"]["id"] == saved["id"]

        try:
            engine.translate("   ")
        except ValueError:
            pass
        else:
            raise AssertionError("blank source accepted")

    assert abs(tulun.chrfpp("cat sat", "cat sit") - 34.583333333333336) < 1e-9
    assert tulun.chrfpp("same", "same") == 100.0
    assert tulun.chrfpp_corpus_score([]) is None
    assert [t[0] for t in tulun.tokenize("Don't stop-now!")] == ["Don't", "stop-now"]
    before, after = tulun.diff_spans("a b c", "a x c")
    assert (before, after) == ([(2, 3)], [(2, 3)])
    print("smoke test ok")


if __name__ == "__main__":
    main()
