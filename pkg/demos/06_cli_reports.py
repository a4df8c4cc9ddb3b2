# %% [markdown]
# # Command line reports
#
# The `contact-wick` command writes deterministic JSON reports.  Exit codes:
# 0 all checks pass, 1 a check failed, 2 input error, 3 jet budget exhausted.

# %%
import json
import subprocess
import sys


def run(*args):
    p = subprocess.run([sys.executable, "-m", "contact_wick", *args], capture_output=True, text=True)
    return p.returncode, p.stdout, p.stderr


# %%
code, out, _ = run("verify", "--builtin", "sphere3", "--points", "5", "--seed", "1")
doc = json.loads(out)
print(code, doc["worst"])

# %%
code, out, _ = run("classify", "--builtin", "deformed3", "--points", "3")
print(code, json.loads(out)["flags"])

# %%
code, out, _ = run("star", "--builtin", "heisenberg3", "--point", "0.1,0.2,0.3",
                   "--a", "x", "--b", "y", "--nu-cutoff", "2")
print(code, json.loads(out)["results"][0]["commutator"])

# %%
code, out, err = run("fedosov", "--builtin", "heisenberg3", "--point", "0,0,0",
                     "--nu-cutoff", "5", "--order", "4")
print(code, err.strip())
