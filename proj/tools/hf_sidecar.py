#!/usr/bin/env python3
"""Serves local Hugging Face models over the psyprobe HTTP protocol.

POST /generate {model, prompt, temperature, top_p, max_length, [top_k], [seed]} -> {text}
POST /nli      {model, pairs: [{premise, hypothesis}]}                           -> {results: [...]}

Models load lazily by name and stay cached. Example:

    python tools/hf_sidecar.py --port 8089
    psyprobe probe --backend http --model gpt2 --endpoint http://127.0.0.1:8089 \
        --nli-model valhalla/distilbart-mnli-12-1 --nli-endpoint http://127.0.0.1:8089
"""

import argparse
import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import torch
from transformers import AutoModelForCausalLM, AutoModelForSequenceClassification, AutoTokenizer

log = logging.getLogger("hf_sidecar")
_lock = threading.Lock()
_cache = {}


def _load(kind, name):
    key = (kind, name)
    with _lock:
        if key not in _cache:
            log.info("loading %s model %s", kind, name)
            tok = AutoTokenizer.from_pretrained(name)
            cls = AutoModelForCausalLM if kind == "causal" else AutoModelForSequenceClassification
            model = cls.from_pretrained(name).eval()
            _cache[key] = (tok, model, threading.Lock())
        return _cache[key]


def generate(req):
    tok, model, lock = _load("causal", req["model"])
    prompt = req.get("prompt", "")
    if prompt:
        ids = tok(prompt, return_tensors="pt").input_ids
    else:
        ids = torch.tensor([[tok.bos_token_id]])
    kwargs = dict(
        do_sample=True,
        temperature=float(req.get("temperature", 1.0)),
        top_p=float(req.get("top_p", 1.0)),
        top_k=int(req.get("top_k", 0)),
        max_new_tokens=int(req.get("max_length", 256)),
        pad_token_id=tok.eos_token_id,
    )
    with lock, torch.no_grad():
        if "seed" in req:
            torch.manual_seed(int(req["seed"]) % (2**63))
        out = model.generate(ids, attention_mask=torch.ones_like(ids), **kwargs)
    return {"text": tok.decode(out[0, ids.shape[1]:], skip_special_tokens=True)}


def nli(req):
    tok, model, lock = _load("nli", req["model"])
    labels = {v.lower(): int(k) for k, v in model.config.id2label.items()}
    pairs = req["pairs"]
    if not pairs:
        return {"results": []}
    enc = tok([p["premise"] for p in pairs], [p["hypothesis"] for p in pairs], return_tensors="pt",
              padding=True, truncation="only_first")
    with lock, torch.no_grad():
        logits = model(**enc).logits
    probs = logits.softmax(-1)
    results = []
    for row, p in zip(logits, probs):
        results.append({
            "entailment": float(p[labels["entailment"]]),
            "contradiction": float(p[labels["contradiction"]]),
            "neutral": float(p[labels["neutral"]]),
            "entailment_logit": float(row[labels["entailment"]]),
        })
    return {"results": results}


class Handler(BaseHTTPRequestHandler):
    routes = {"/generate": generate, "/nli": nli}

    def do_POST(self):
        route = self.routes.get(self.path.rstrip("/") or "/")
        if route is None:
            self._reply(404, {"error": "unknown route " + self.path})
            return
        try:
            body = json.loads(self.rfile.read(int(self.headers.get("Content-Length", 0))))
            self._reply(200, route(body))
        except (KeyError, ValueError) as e:
            self._reply(400, {"error": str(e)})
        except Exception as e:  # noqa: BLE001
            log.exception("request failed")
            self._reply(500, {"error": str(e)})

    def _reply(self, status, payload):
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args):
        log.debug(fmt, *args)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8089)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    log.info("listening on http://%s:%d", args.host, args.port)
    ThreadingHTTPServer((args.host, args.port), Handler).serve_forever()


if __name__ == "__main__":
    main()
