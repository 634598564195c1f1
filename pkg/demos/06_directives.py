"""Writing approximation directives as text."""
from approxsim.directives import DirectiveError, parse_directive, unparse

texts = [
    "#pragma approx memo(in:2:0.5f:4) level(warp) in(input[i*5:5:N]) out(output1[i])",
    "memo(out:3:5:1.5f) level(thread) out(output2[i])",
    "perfo(small:4)",
    "memo(out:3:5) out(y[i])",
    "memo(out:1:1:1) perfo(ini:10) out(y[i])",
]
for t in texts:
    try:
        spec = parse_directive(t)
        print("ok   ", unparse(spec))
    except DirectiveError as e:
        print("error", e)
        print("      " + t)
        print("      " + " " * e.offset + "^")
