#!/usr/bin/env python3
"""Generates the bundled MiniLang corpus.

Programs are small contest-style solutions written in a handful of author
styles (naming, loop idioms, helper decomposition). Output is deterministic
for a given seed.

    python3 tools/generate_corpus.py --out data/corpus --programs 400 --seed 2015
"""

import argparse
import os
import random


class Style:
    def __init__(self, rng, name):
        self.name = name
        self.loop_vars = rng.choice([["i", "j", "k"], ["i", "j", "k"], ["idx", "jdx", "kdx"],
                                     ["a", "b", "c"], ["x", "y", "z"], ["p", "q", "r"]])
        self.count = rng.choice(["count", "cnt", "c", "total", "num"])
        self.result = rng.choice(["res", "result", "ans", "answer", "ret"])
        self.best = rng.choice(["best", "mx", "maxVal", "top", "hi"])
        self.arr = rng.choice(["arr", "a", "nums", "values", "data", "xs"])
        self.size = rng.choice(["n", "len", "size", "m", "sz"])
        if self.arr in self.loop_vars:
            self.arr = "arr"
        self.temp = rng.choice(["t", "tmp", "temp", "swap"])
        self.prefix_incr = rng.random() < 0.7
        self.prefers_while = rng.random() < 0.25
        self.uses_helpers = rng.random() < 0.6
        self.else_if = rng.random() < 0.5
        self.uses_print = rng.random() < 0.5
        self.mod_name = rng.choice(["MOD", "MODULO", "P", "BIG"])
        self.func_case = rng.choice(["camel", "snake"])

    def fname(self, *parts):
        if self.func_case == "snake":
            return "_".join(parts)
        return parts[0] + "".join(p[:1].upper() + p[1:] for p in parts[1:])


class Program:
    def __init__(self, rng, style):
        self.rng = rng
        self.s = style
        self.lines = []
        self.indent = 0
        self.globals = []
        self.funcs = []  # (name, [param types], return type)

    # -- emission helpers -------------------------------------------------
    def emit(self, text):
        self.lines.append("    " * self.indent + text)

    def open(self, head):
        self.emit(head + " {")
        self.indent += 1

    def close(self, tail=""):
        self.indent -= 1
        self.emit("}" + tail)

    def incr(self, v):
        return "++" + v if self.s.prefix_incr else v + " = " + v + " + 1"

    def lit(self):
        return str(self.rng.choice([0, 1, 1, 2, 2, 3, 10, 100]))

    # -- loops ----------------------------------------------------------
    def for_loop(self, v, lo, hi, strict=True):
        op = "<" if strict else "<="
        if self.s.prefers_while and self.rng.random() < 0.5:
            self.emit("int %s = %s;" % (v, lo))
            self.open("while (%s %s %s)" % (v, op, hi))
            return ("while", v)
        self.open("for (int %s = %s; %s %s %s; %s)" % (v, lo, v, op, hi, self.incr(v)))
        return ("for", v)

    def end_loop(self, token):
        kind, v = token
        if kind == "while":
            self.emit(self.incr(v) + ";")
        self.close()

    # -- expressions ----------------------------------------------------
    def int_expr(self, ints, depth=0):
        r = self.rng.random()
        if depth >= 2 or r < 0.35:
            return self.rng.choice(ints) if ints and self.rng.random() < 0.75 else self.lit()
        op = self.rng.choice(["+", "+", "-", "*", "%", "/"])
        left = self.int_expr(ints, depth + 1)
        right = self.int_expr(ints, depth + 1)
        if op in ("%", "/"):
            right = self.rng.choice(["2", "10", str(self.rng.randint(3, 9))])
        e = "%s %s %s" % (left, op, right)
        if depth > 0 and self.rng.random() < 0.3:
            e = "(" + e + ")"
        return e

    def cond(self, ints):
        a = self.rng.choice(ints) if ints else self.lit()
        kind = self.rng.random()
        if kind < 0.3:
            return "%s %% 2 == 0" % a
        if kind < 0.55:
            return "%s < %s" % (a, self.int_expr(ints, 1))
        if kind < 0.7:
            return "%s == %s" % (a, self.lit())
        if kind < 0.85:
            return "%s != %s" % (a, self.int_expr(ints, 1))
        return "%s <= %s && %s != %s" % (a, self.int_expr(ints, 1), a, self.lit())

    # -- function bodies ------------------------------------------------
    def fn_array_stat(self):
        s = self.s
        which = self.rng.choice(["sum", "count", "max", "min", "evens"])
        name = s.fname(which, self.rng.choice(["of", "in", "all", "values"]))
        arr, n = s.arr, s.size
        self.open("fn %s(int[] %s, int %s)" % (name, arr, n))
        i = s.loop_vars[0]
        if which in ("sum", "evens"):
            acc = s.result
            self.emit("int %s = 0;" % acc)
            lp = self.for_loop(i, "0", n)
            if which == "evens":
                self.open("if (%s[%s] %% 2 == 0)" % (arr, i))
                self.emit("%s = %s + %s[%s];" % (acc, acc, arr, i))
                self.close()
            else:
                self.emit("%s = %s + %s[%s];" % (acc, acc, arr, i))
            self.end_loop(lp)
        elif which == "count":
            acc = s.count
            self.emit("int %s = 0;" % acc)
            lp = self.for_loop(i, "0", n)
            self.open("if (%s)" % self.cond(["%s[%s]" % (arr, i)]))
            self.emit("%s = %s + 1;" % (acc, acc))
            self.close()
            self.end_loop(lp)
        else:
            acc = s.best
            self.emit("int %s = %s[0];" % (acc, arr))
            lp = self.for_loop(i, "1", n)
            if which == "max":
                self.open("if (%s < %s[%s])" % (acc, arr, i))
            else:
                self.open("if (%s[%s] < %s)" % (arr, i, acc))
            self.emit("%s = %s[%s];" % (acc, arr, i))
            self.close()
            self.end_loop(lp)
        self.emit("return %s;" % acc)
        self.close()
        self.funcs.append((name, ["int[]", "int"], "int"))

    def fn_pairs(self):
        s = self.s
        name = s.fname("count", self.rng.choice(["pairs", "inversions", "matches"]))
        arr, n = s.arr, s.size
        i, j = s.loop_vars[0], s.loop_vars[1]
        self.open("fn %s(int[] %s, int %s)" % (name, arr, n))
        self.emit("int %s = 0;" % s.count)
        lp = self.for_loop(i, "0", n)
        lp2 = self.for_loop(j, i + " + 1", n)
        test = self.rng.choice([
            "%s[%s] < %s[%s]" % (arr, j, arr, i),
            "%s[%s] == %s[%s]" % (arr, i, arr, j),
            "(%s[%s] + %s[%s]) %% 2 == 0" % (arr, i, arr, j),
        ])
        self.open("if (%s)" % test)
        self.emit("%s = %s + 1;" % (s.count, s.count))
        self.close()
        self.end_loop(lp2)
        self.end_loop(lp)
        self.emit("return %s;" % s.count)
        self.close()
        self.funcs.append((name, ["int[]", "int"], "int"))

    def fn_gcd(self):
        s = self.s
        name = s.fname("gcd") if self.rng.random() < 0.7 else s.fname("greatest", "divisor")
        a, b = self.rng.choice([("a", "b"), ("x", "y"), ("u", "v"), ("p", "q")])
        self.open("fn %s(int %s, int %s)" % (name, a, b))
        if self.rng.random() < 0.5:
            self.open("while (%s != 0)" % b)
            self.emit("int %s = %s %% %s;" % (s.temp, a, b))
            self.emit("%s = %s;" % (a, b))
            self.emit("%s = %s;" % (b, s.temp))
            self.close()
            self.emit("return %s;" % a)
        else:
            self.open("if (%s == 0)" % b)
            self.emit("return %s;" % a)
            self.close()
            self.emit("return %s(%s, %s %% %s);" % (name, b, a, b))
        self.close()
        self.funcs.append((name, ["int", "int"], "int"))

    def fn_prime(self):
        s = self.s
        name = s.fname("is", "prime")
        v = self.rng.choice(["n", "x", "num", "v"])
        d = s.loop_vars[0] if s.loop_vars[0] != v else "d"
        self.open("fn %s(int %s)" % (name, v))
        self.open("if (%s < 2)" % v)
        self.emit("return false;")
        self.close()
        self.open("for (int %s = 2; %s * %s <= %s; %s)" % (d, d, d, v, self.incr(d)))
        self.open("if (%s %% %s == 0)" % (v, d))
        self.emit("return false;")
        self.close()
        self.close()
        self.emit("return true;")
        self.close()
        self.funcs.append((name, ["int"], "bool"))

    def fn_recursive(self):
        s = self.s
        which = self.rng.choice(["fib", "fact", "power"])
        v = self.rng.choice(["n", "k", "x"])
        if which == "power":
            name = s.fname("power") if self.rng.random() < 0.5 else s.fname("pow", "mod")
            b = "base" if self.rng.random() < 0.5 else "b"
            self.open("fn %s(int %s, int %s)" % (name, b, v))
            self.open("if (%s == 0)" % v)
            self.emit("return 1;")
            self.close()
            self.emit("int %s = %s(%s, %s / 2);" % (s.temp, name, b, v))
            self.emit("%s = %s * %s;" % (s.temp, s.temp, s.temp))
            self.open("if (%s %% 2 == 1)" % v)
            self.emit("%s = %s * %s;" % (s.temp, s.temp, b))
            self.close()
            self.emit("return %s;" % s.temp)
            self.close()
            self.funcs.append((name, ["int", "int"], "int"))
            return
        name = s.fname("fib") if which == "fib" else s.fname("factorial")
        self.open("fn %s(int %s)" % (name, v))
        self.open("if (%s <= 1)" % v)
        self.emit("return %s;" % (v if which == "fib" else "1"))
        self.close()
        if which == "fib":
            self.emit("return %s(%s - 1) + %s(%s - 2);" % (name, v, name, v))
        else:
            self.emit("return %s * %s(%s - 1);" % (v, name, v))
        self.close()
        self.funcs.append((name, ["int"], "int"))

    def fn_string(self):
        s = self.s
        name = s.fname(self.rng.choice(["repeat", "build", "make"]), self.rng.choice(["line", "word", "text"]))
        w, n = self.rng.choice([("s", "n"), ("word", "times"), ("text", "k")])
        out = self.rng.choice(["out", "sb", "res", "line"])
        i = s.loop_vars[0]
        self.open("fn %s(string %s, int %s)" % (name, w, n))
        self.emit('string %s = "";' % out)
        lp = self.for_loop(i, "0", n)
        if self.rng.random() < 0.5:
            self.open("if (0 < %s)" % i)
            self.emit('%s = %s + "%s";' % (out, out, self.rng.choice([" ", ",", "-"])))
            self.close()
        self.emit("%s = %s + %s;" % (out, out, w))
        self.end_loop(lp)
        self.emit("return %s;" % out)
        self.close()
        self.funcs.append((name, ["string", "int"], "string"))

    def fn_dp(self):
        s = self.s
        name = s.fname(self.rng.choice(["count", "num", "solve"]), self.rng.choice(["ways", "paths", "steps"]))
        n = s.size
        i = s.loop_vars[0]
        dp = self.rng.choice(["dp", "ways", "memo", "f"])
        self.open("fn %s(int %s)" % (name, n))
        self.emit("int[] %s = newArray(%s + 1);" % (dp, n))
        self.emit("%s[0] = 1;" % dp)
        lp = self.for_loop(i, "1", n, strict=False)
        self.emit("%s[%s] = %s[%s - 1];" % (dp, i, dp, i))
        self.open("if (2 <= %s)" % i)
        self.emit("%s[%s] = (%s[%s] + %s[%s - 2]) %% %s;" % (dp, i, dp, i, dp, i, s.mod_name))
        self.close()
        self.end_loop(lp)
        self.emit("return %s[%s];" % (dp, n))
        self.close()
        self.funcs.append((name, ["int"], "int"))
        return True

    def fn_classify(self):
        s = self.s
        name = s.fname(self.rng.choice(["classify", "grade", "label"]))
        v = self.rng.choice(["score", "v", "x", "value"])
        self.open("fn %s(int %s)" % (name, v))
        cuts = sorted(self.rng.sample([10, 20, 50, 60, 70, 80, 90, 100], 3))
        words = self.rng.sample(["low", "mid", "high", "top", "bad", "ok", "good"], 4)
        if s.else_if:
            self.open("if (%s < %d)" % (v, cuts[0]))
            self.emit('return "%s";' % words[0])
            self.close(" else if (%s < %d) {" % (v, cuts[1]))
            self.indent += 1
            self.emit('return "%s";' % words[1])
            self.close(" else {")
            self.indent += 1
            self.emit('return "%s";' % words[2])
            self.close()
        else:
            for c, w in zip(cuts, words):
                self.open("if (%s < %d)" % (v, c))
                self.emit('return "%s";' % w)
                self.close()
            self.emit('return "%s";' % words[3])
        self.close()
        self.funcs.append((name, ["int"], "string"))

    def fn_array_multi(self):
        s = self.s
        name = s.fname(self.rng.choice(["summarize", "scan", "analyze"]), self.rng.choice(["values", "array", "input"]))
        arr, n = s.arr, s.size
        i = s.loop_vars[0]
        acc, best, cnt = s.result, s.best, s.count
        self.open("fn %s(int[] %s, int %s)" % (name, arr, n))
        self.emit("int %s = 0;" % acc)
        self.emit("int %s = %s[0];" % (best, arr))
        self.emit("int %s = 0;" % cnt)
        lp = self.for_loop(i, "0", n)
        cur = "%s[%s]" % (arr, i)
        if self.rng.random() < 0.5:
            self.emit("int %s = %s;" % (s.temp, self.int_expr([cur, i], 1)))
            cur = s.temp
        self.emit("%s = %s + %s;" % (acc, acc, cur))
        self.open("if (%s < %s)" % (best, cur))
        self.emit("%s = %s;" % (best, cur))
        self.close()
        self.open("if (%s)" % self.cond([cur]))
        self.emit("%s = %s + 1;" % (cnt, cnt))
        if self.rng.random() < 0.4:
            self.emit("%s = %s - %s;" % (acc, acc, self.lit()))
        self.close()
        self.end_loop(lp)
        self.emit("return %s;" % self.int_expr([acc, best, cnt], 1))
        self.close()
        self.funcs.append((name, ["int[]", "int"], "int"))

    def main_loop(self, ints):
        s = self.s
        i = s.loop_vars[1]
        acc = s.result + "Sum" if s.func_case == "camel" else s.result + "_sum"
        self.emit("int %s = 0;" % acc)
        lp = self.for_loop(i, "0", s.size)
        self.emit("int %s = %s;" % (s.temp, self.int_expr(ints + [i], 1)))
        self.open("if (%s)" % self.cond([s.temp]))
        self.emit("%s = %s + %s;" % (acc, acc, s.temp))
        if self.s.uses_print:
            self.close(" else {")
            self.indent += 1
            self.emit("print(%s);" % s.temp)
        self.close()
        self.end_loop(lp)
        ints.append(acc)

    def fn_main(self):
        s = self.s
        name = self.rng.choice(["main", "solve", "run"])
        self.open("fn %s()" % name)
        n, arr = s.size, s.arr
        ints = []
        self.emit("int %s = readInt();" % n)
        ints.append(n)
        has_arr = self.rng.random() < 0.8
        if has_arr:
            i = s.loop_vars[0]
            self.emit("int[] %s = newArray(%s);" % (arr, n))
            lp = self.for_loop(i, "0", n)
            self.emit("%s[%s] = readInt();" % (arr, i))
            self.end_loop(lp)
        for fname, ptypes, rtype in self.funcs:
            args = []
            ok = True
            for t in ptypes:
                if t == "int[]":
                    if not has_arr:
                        ok = False
                    args.append(arr)
                elif t == "int":
                    args.append(self.int_expr(ints, 1))
                elif t == "string":
                    args.append('"%s"' % self.rng.choice(["ab", "x", "yes", "no"]))
            if not ok:
                continue
            call = "%s(%s)" % (fname, ", ".join(args))
            if rtype == "int":
                v = self.rng.choice([s.result, s.count, "r", "value", "v"])
                while v in ints:
                    v = v + "2"
                self.emit("int %s = %s;" % (v, call))
                ints.append(v)
                if self.rng.random() < 0.5:
                    self.open("if (%s)" % self.cond(ints))
                    self.emit("%s = %s;" % (v, self.int_expr(ints)))
                    self.close()
            elif rtype == "bool":
                self.open("if (%s)" % call)
                self.emit('print("yes");')
                self.close(" else {")
                self.indent += 1
                self.emit('print("no");')
                self.close()
            else:
                self.emit("print(%s);" % call)
        if self.rng.random() < 0.5:
            self.main_loop(ints)
        if len(ints) > 1:
            self.emit("print(%s);" % self.int_expr(ints))
        else:
            self.emit("print(%s);" % ints[0])
        self.close()

    def generate(self):
        s = self.s
        if self.rng.random() < 0.4:
            self.emit("int %s = 1000000007;" % s.mod_name)
            self.globals.append(s.mod_name)
        makers = [self.fn_array_stat, self.fn_pairs, self.fn_gcd, self.fn_prime,
                  self.fn_recursive, self.fn_string, self.fn_classify, self.fn_array_multi]
        if s.mod_name in self.globals:
            makers.append(self.fn_dp)
        count = self.rng.randint(1, 3) if s.uses_helpers else 1
        for maker in self.rng.sample(makers, count):
            maker()
            self.emit("")
        self.fn_main()
        return "\n".join(self.lines) + "\n"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/corpus")
    ap.add_argument("--programs", type=int, default=400)
    ap.add_argument("--authors", type=int, default=40)
    ap.add_argument("--seed", type=int, default=2015)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    styles = [Style(rng, "author%02d" % a) for a in range(args.authors)]
    meta_lines = []
    for p in range(args.programs):
        style = styles[rng.randrange(len(styles))]
        text = Program(rng, style).generate()
        rel = os.path.join(style.name, "p%04d.ml0" % p)
        path = os.path.join(args.out, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as f:
            f.write(text)
        meta_lines.append("%s\t%s" % (rel, style.name))
    with open(os.path.join(args.out, "authors.tsv"), "w") as f:
        f.write("\n".join(meta_lines) + "\n")


if __name__ == "__main__":
    main()
