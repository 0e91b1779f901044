# Independent oracles: python `grapheme` (legacy UAX29 rules, no conjunct joining)
# and python `regex` (lookahead-capable engine) on the published patterns.
import json, random, unicodedata, grapheme, regex

random.seed(20240917)
blocks = [(0x0900, 0x097F), (0x0B80, 0x0BFF), (0x0D80, 0x0DFF)]
alpha = [chr(c) for lo, hi in blocks for c in range(lo, hi + 1)
         if unicodedata.category(chr(c)) != 'Cn']
alpha += list("ab ") + ["‍", "‌"]

curated = ["நன்றி", "धन्यवाद", "ස්තූතියි", "ක්‍රී", "ஹ்ரீ", "வணக்கம்", "नमस्ते",
           "ආයුබෝවන්", "hello", "", "a‍b", "क्‍ष"]
fuzz = ["".join(random.choice(alpha) for _ in range(random.randint(1, 12))) for _ in range(400)]
seg = [{"text": s, "clusters": list(grapheme.graphemes(s))} for s in curated + fuzz]
json.dump({"unicode_version": unicodedata.unidata_version, "cases": seg},
          open("graphemes_default.json", "w"), ensure_ascii=False, indent=0)

gpt2 = r"""'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"""
gpt4 = r"""(?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+"""
texts = ["hello!", "வணக்கம்!", "ආයුබෝවන්!", "नमस्ते!", "நன்றி", "Hello World",
         "I'm here  and   there\n\nnext 12345 items!!", "ස්තූතියි", "धन्यवाद",
         "இது ஒரு சோதனை வாக்கியம், 2024-ல் எழுதப்பட்டது.",
         "यह एक परीक्षण वाक्य है।", "මෙය පරීක්ෂණ වාක්‍යයකි.", "  leading and trailing  ",
         "Tabs\tand\r\nCRLF\r\n", "WE'LL SEE THEY'RE"]
pre = [{"text": t, "gpt2": regex.findall(gpt2, t), "gpt4_llama3": regex.findall(gpt4, t)} for t in texts]
json.dump({"gpt2_pattern": gpt2, "gpt4_llama3_pattern": gpt4, "cases": pre},
          open("pretokens.json", "w"), ensure_ascii=False, indent=0)
