# coding: utf-8

# # Driving experiments from the command line
#
# Each config in ``demos/configs`` is one experiment. The sweep runs them in
# parallel and writes one summary row per config; rerunning gives a
# byte-identical summary.

# In[1]:

import subprocess
import sys
import tempfile
from pathlib import Path

here = Path(__file__).resolve().parent
out = Path(tempfile.mkdtemp(prefix="orlicz-sweep-"))
cmd = [sys.executable, "-m", "orlicz_parabolic", "sweep", str(here / "configs"), "--out", str(out), "--workers", "2"]
res = subprocess.run(cmd, capture_output=True, text=True)
print(res.stdout)
print("exit code:", res.returncode, "(3 means at least one config failed a criterion)")


# In[2]:

print((out / "summary.csv").read_text())


# Single commands work on one config at a time.

# In[3]:

for args in (["exponents", "--g0", "2", "--f0", "1", "--n", "1", "--r", "2"],
             ["check-nfunction", str(here / "configs" / "plap_p3_q2.yaml"), "--samples", "2000"]):
    res = subprocess.run([sys.executable, "-m", "orlicz_parabolic", *args], capture_output=True, text=True)
    print("$ orlicz-parabolic", " ".join(args))
    print(res.stdout)
