import json
import sys
import textwrap
from pathlib import Path
from types import SimpleNamespace

import pytest
import yaml

from src.java_front import SourceFile, parse_source

OPS_JAVA = """\
class Ops {
    int aorb(int a, int b) { return a + b; }
    int aors(int a) { return ++a; }
    int aoru(int a) { return -a; }
    int lor(int a, int b) { return a & b; }
    int sor(int a, int b) { return a >> b; }
    boolean ror(int a, int b) { return a >= b; }
    boolean cor(boolean a, boolean b) { return a && b; }
    boolean cod(boolean a) { return !a; }
    int saor(int a, int b) { a *= b; return a; }
}
"""

NULLS_JAVA = """\
class Nulls {
    String ret(String s) { return s.trim(); }
    int prim(int x) { return x; }
    Object make() { Object o = new Object(); return o; }
    boolean check(Object o) { return o == null; }
}
"""

FAKE_BUILD = """\
import json
import pathlib
import sys
import time

rules = json.loads(pathlib.Path(sys.argv[1]).read_text())
src = pathlib.Path(sys.argv[2])
with open(pathlib.Path(sys.argv[1]).parent / "runs.log", "a") as log:
    log.write("run\\n")
out = sys.stdout.buffer
if rules.get("always") == "fail":
    out.write(b"Tests run: 1, Failures: 1\\n")
    out.flush()
    sys.exit(1)
for rule in rules.get("rules", []):
    text = (src / rule["file"]).read_text()
    if rule["contains"] in text:
        if rule["action"] == "fail":
            out.write(b"Tests run: 3, Failures: 1\\n")
            out.write(("Failed tests:   " + rule["test"] + "\\n").encode())
            out.flush()
            sys.exit(1)
        if rule["action"] == "sleep":
            out.flush()
            time.sleep(30)
            sys.exit(0)
        if rule["action"] == "compile":
            out.write(b"[ERROR] COMPILATION ERROR :\\n")
            out.flush()
            sys.exit(1)
out.write(b"SENTINEL \\xe2\\x9c\\x93\\n")
out.write(b"Tests run: 3, Failures: 0\\n")
out.flush()
sys.stderr.write("done\\n")
sys.exit(0)
"""

PROJECT_SOURCES = {
    "org/acme/Alpha.java": "package org.acme;\n\nclass Alpha {\n    int add(int a, int b) { return a + b; }\n}\n",
    "org/acme/Beta.java": "package org.acme;\n\nclass Beta {\n    boolean ge(int a, int b) { return a >= b; }\n}\n",
    "org/acme/Gamma.java": "package org.acme;\n\nclass Gamma {\n    int inc(int i) {\n        i++;\n        return i;\n    }\n}\n",
    "org/acme/Delta.java": "package org.acme;\n\nclass Delta {\n    boolean not(boolean a) { return !a; }\n}\n",
    "org/acme/api/Epsilon.java": "package org.acme.api;\n\ninterface Epsilon {\n    void run();\n}\n",
    "org/acme/util/Zeta.java": "package org.acme.util;\n\nclass Zeta {\n    int shl(int a) { return a << 1; }\n}\n",
}

PROJECT_RULES = [
    {"file": "org/acme/Alpha.java", "contains": "a - b", "action": "fail", "test": "testAdd(org.acme.AlphaTest)"},
    {"file": "org/acme/Gamma.java", "contains": "i--", "action": "sleep"},
    {"file": "org/acme/Delta.java", "contains": "return a;", "action": "compile"},
    {"file": "org/acme/util/Zeta.java", "contains": "a >> 1", "action": "fail",
     "test": "testShift(org.acme.util.ZetaTest)"},
]

# status per qualified mutant id under PROJECT_RULES
PROJECT_EXPECTED = {
    "org/acme/Alpha.java:1": "killed",
    "org/acme/Beta.java:1": "survived",
    "org/acme/Gamma.java:1": "killed-timeout",
    "org/acme/Delta.java:1": "invalid",
    "org/acme/util/Zeta.java:1": "killed",
}


@pytest.fixture
def java():
    """Factory: Java code -> (SourceFile, SyntaxTree)."""
    def parse(code, path="A.java"):
        file = SourceFile(path, textwrap.dedent(code).encode("utf-8"))
        return file, parse_source(file)
    return parse


@pytest.fixture
def fake_build(tmp_path):
    """Factory: rules dict -> build command running the scripted fake build against tmp_path/src."""
    script = tmp_path / "fakebuild.py"
    script.write_text(FAKE_BUILD)
    rules_path = tmp_path / "rules.json"

    def command(rules=None, src=None):
        rules_path.write_text(json.dumps(rules or {}))
        return [sys.executable, str(script), str(rules_path), str(src or tmp_path / "src")]
    return command


@pytest.fixture
def build_runs(tmp_path):
    """Number of fake build invocations so far."""
    def count():
        log = Path(tmp_path, "runs.log")
        return len(log.read_text().splitlines()) if log.exists() else 0
    return count


@pytest.fixture
def fake_project(tmp_path, fake_build):
    """Six-file Java project, scripted fake build and mutation.yaml."""
    src = tmp_path / "src"
    for rel_path, content in PROJECT_SOURCES.items():
        target = src / rel_path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content)
    command = fake_build({"rules": PROJECT_RULES}, src)
    config_path = tmp_path / "mutation.yaml"

    def write_config(**extra):
        data = {"source_root": "src", "build_dir": ".", "output_dir": "out",
                "build_command": command, "timeout": 2, "seed": 7}
        data.update(extra)
        config_path.write_text(yaml.safe_dump(data))
        return config_path

    write_config()
    return SimpleNamespace(root=tmp_path, src=src, out=tmp_path / "out", config=config_path,
                           command=command, write_config=write_config, fake_build=fake_build)
