"""Command-line contract checks: exit codes, output shapes, config files."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

CLI = sys.argv[1]
failures = []


def run(args, cwd, expect=0):
    proc = subprocess.run([CLI, *args], cwd=cwd, capture_output=True, text=True)
    if proc.returncode != expect:
        failures.append(f"{' '.join(args)}: exit {proc.returncode}, wanted {expect}\n{proc.stderr}")
    return proc


def check(cond, what):
    if not cond:
        failures.append(what)


with tempfile.TemporaryDirectory() as tmp:
    d = Path(tmp)

    out = run(["--seed", "4", "synth", "--preset", "fictional-encyclopedia", "--sigma", "0.02"], d).stdout
    check(len(out.splitlines()) == 151, "synth should emit a header and 150 rows")
    again = run(["--seed", "4", "synth", "--preset", "fictional-encyclopedia", "--sigma", "0.02"], d).stdout
    check(out == again, "synth is not deterministic")
    other = run(["--seed", "5", "synth", "--preset", "fictional-encyclopedia", "--sigma", "0.02"], d).stdout
    check(out != other, "different seeds gave identical synth output")

    (d / "cfg.toml").write_text("seed = 4\nthreads = 2\n")
    from_cfg = run(["--config", "cfg.toml", "synth", "--preset", "fictional-encyclopedia",
                    "--sigma", "0.02"], d).stdout
    check(from_cfg == out, "config file keys do not mirror flags")

    run(["synth", "--preset", "math-arxiv", "--epochs", "1", "-o", "data"], d)
    check((d / "data.csv").exists() and (d / "data.json").exists(), "synth -o did not write files")

    run(["fit", "data.csv", "--form", "5", "--starts", "coarse", "-o", "f5"], d)
    fit5 = json.loads((d / "f5.json").read_text())["datasets"][0]["fit"]
    check(len(fit5["theta"]) == 4 and fit5["form"] == 5, "form 5 should have four free parameters")
    check((d / "f5.txt").exists(), "fit did not write a text table")

    cv = run(["cv", "data.csv", "--forms", "1", "--skip", "3", "--lambda-exp-grid", "0",
              "--lambda-coef-grid", "0", "--restarts", "0"], d).stdout
    doc = json.loads(cv)
    check(doc["reports"][0]["combinations_used"] == 50, "--skip 3 should keep ceil(150/3) combinations")
    check(doc["ranking"][0]["form"] == 1, "cv ranking missing")

    help_text = run(["bootstrap", "--help"], d).stdout
    check("[4000]" in help_text, "bootstrap should default to 4000 resamples")
    check(run(["--help"], d).stdout.count("plan") >= 1, "top-level help lists subcommands")

    compute = json.loads(run(["plan", "compute", "data.csv", "--n-params", "1"], d).stdout)
    check(compute is not None, "compute produced no JSON")

    (d / "bad.csv").write_text("dataset,pretrain_tokens,finetune_tokens,val_loss\nd,0,10,2\nd,0,20,-1\n")
    bad = run(["fit", "bad.csv"], d, expect=2)
    check("2" in bad.stderr, "validation error should name the row")
    run(["fit", "missing.csv"], d, expect=2)
    run(["fit"], d, expect=2)
    run([], d, expect=2)
    run(["plan", "isoloss", "--preset", "fictional-encyclopedia", "--target", "0.5"], d, expect=2)
    run(["plan", "allocate", "--preset", "fictional-encyclopedia", "--budget", "0.5"], d, expect=2)
    run(["report", "f5.json", "--format", "yaml"], d, expect=2)
    run(["plan", "compute", "bad.csv"], d, expect=2)
    run(["synth", "--preset", "no-such-dataset"], d, expect=2)

    text = run(["report", "f5.json"], d).stdout
    check("Fitted parameters" in text, "report text table missing")

if failures:
    print("\n".join(failures))
    sys.exit(1)
print("cli contract ok")
