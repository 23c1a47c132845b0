#!/usr/bin/env python3
"""HTTP bridge exposing a latent diffusion checkpoint to the dreamseg CLI.

    python tools/ldm_bridge.py --checkpoint runwayml/stable-diffusion-v1-5 --port 7860
    dreamseg segment --backend external --model http://127.0.0.1:7860 ...

Needs torch and diffusers. The checkpoint is loaded on the first GET /info;
its query carries `device` and, when the client has DREAMSEG_MODEL_CACHE set,
`cache_dir`. All tensors travel as flat row-major (H, W, C) float lists.
"""

import argparse
import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import torch

_lock = threading.Lock()
_state = {}


def load(checkpoint, device, cache_dir):
    from diffusers import StableDiffusionPipeline

    key = (checkpoint, device, cache_dir)
    if _state.get("key") == key:
        return _state
    pipe = StableDiffusionPipeline.from_pretrained(
        checkpoint, cache_dir=cache_dir or None, torch_dtype=torch.float32, safety_checker=None
    ).to(device)
    for module in (pipe.vae, pipe.unet, pipe.text_encoder):
        module.requires_grad_(False)
        module.eval()
    _state.clear()
    _state.update(
        key=key,
        checkpoint=checkpoint,
        device=device,
        vae=pipe.vae,
        unet=pipe.unet,
        tokenizer=pipe.tokenizer,
        text_encoder=pipe.text_encoder,
        alphas_cumprod=pipe.scheduler.alphas_cumprod.double().tolist(),
        scale=pipe.vae.config.scaling_factor,
        downsample=2 ** (len(pipe.vae.config.block_out_channels) - 1),
        channels=pipe.unet.config.in_channels,
        uncond=None,
    )
    return _state


def image_tensor(img, device):
    h, w = img["height"], img["width"]
    x = torch.tensor(img["pixels"], dtype=torch.float32, device=device).view(h, w, 3)
    return x.permute(2, 0, 1).unsqueeze(0)


def latent_tensor(lat, device):
    h, w, c = lat["height"], lat["width"], lat["channels"]
    z = torch.tensor(lat["values"], dtype=torch.float32, device=device).view(h, w, c)
    return z.permute(2, 0, 1).unsqueeze(0)


def latent_json(z):
    z = z[0].permute(1, 2, 0).contiguous()
    h, w, c = z.shape
    return {"height": h, "width": w, "channels": c, "values": z.double().flatten().tolist()}


def encode(s, x):
    # deterministic: the posterior mean, scaled like the training latents
    return s["vae"].encode(2.0 * x - 1.0).latent_dist.mean * s["scale"]


def embed(s, caption):
    tok = s["tokenizer"](
        [caption], padding="max_length", max_length=s["tokenizer"].model_max_length, truncation=True, return_tensors="pt"
    )
    return s["text_encoder"](tok.input_ids.to(s["device"]))[0]


def encode_image(s, body):
    with torch.no_grad():
        z = encode(s, image_tensor(body["image"], s["device"]))
    return {"latent": latent_json(z)}


def encode_image_vjp(s, body):
    x = image_tensor(body["image"], s["device"]).requires_grad_(True)
    cot = latent_tensor(body["cotangent"], s["device"])
    (grad,) = torch.autograd.grad(encode(s, x), x, grad_outputs=cot)
    g = grad[0].permute(1, 2, 0).contiguous()
    return {"pixel_grad": {"values": g.double().flatten().tolist()}}


def encode_text(s, body):
    with torch.no_grad():
        e = embed(s, body["caption"])[0]
    return {"embedding": {"caption": body["caption"], "tokens": e.shape[0], "dim": e.shape[1],
                          "values": e.double().flatten().tolist()}}


def predict_noise(s, body):
    emb = body["embedding"]
    cond = torch.tensor(emb["values"], dtype=torch.float32, device=s["device"]).view(1, emb["tokens"], emb["dim"])
    z = latent_tensor(body["latent"], s["device"])
    # continuous t in [0, 1] maps onto the discrete training steps
    step = torch.tensor([body["t"] * (len(s["alphas_cumprod"]) - 1)], device=s["device"])
    g = float(body.get("guidance_scale", 1.0))
    with torch.no_grad():
        if g == 1.0:
            eps = s["unet"](z, step, encoder_hidden_states=cond).sample
        else:
            if s["uncond"] is None:
                s["uncond"] = embed(s, "")
            both = s["unet"](torch.cat([z, z]), torch.cat([step, step]),
                             encoder_hidden_states=torch.cat([s["uncond"], cond])).sample
            u, c = both.chunk(2)
            eps = u + g * (c - u)
    return {"noise": latent_json(eps)}


ROUTES = {
    "/encode_image": encode_image,
    "/encode_image_vjp": encode_image_vjp,
    "/encode_text": encode_text,
    "/predict_noise": predict_noise,
}


class Handler(BaseHTTPRequestHandler):
    checkpoint = None
    default_device = "cpu"

    def reply(self, status, payload):
        data = json.dumps(payload).encode() if not isinstance(payload, str) else payload.encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json" if status == 200 else "text/plain")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        url = urlparse(self.path)
        if url.path != "/info":
            return self.reply(404, "not found")
        q = parse_qs(url.query)
        device = q.get("device", [self.default_device])[0]
        cache_dir = q.get("cache_dir", [os.environ.get("DREAMSEG_MODEL_CACHE", "")])[0]
        try:
            with _lock:
                s = load(self.checkpoint, device, cache_dir)
        except Exception as e:  # reported to the client as a load failure
            return self.reply(500, f"cannot load {self.checkpoint}: {e}")
        self.reply(200, {"checkpoint": s["checkpoint"], "downsample": s["downsample"], "channels": s["channels"],
                         "alphas_cumprod": s["alphas_cumprod"]})

    def do_POST(self):
        route = ROUTES.get(self.path)
        if route is None:
            return self.reply(404, "not found")
        if "key" not in _state:
            return self.reply(500, "model not loaded; GET /info first")
        try:
            body = json.loads(self.rfile.read(int(self.headers.get("Content-Length", 0))))
            with _lock:
                out = route(_state, body)
        except (KeyError, ValueError, RuntimeError) as e:
            return self.reply(400, str(e))
        self.reply(200, out)

    def log_message(self, *args):
        pass


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--checkpoint", default="runwayml/stable-diffusion-v1-5")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=7860)
    ap.add_argument("--device", default="cuda" if torch.cuda.is_available() else "cpu")
    args = ap.parse_args()
    Handler.checkpoint = args.checkpoint
    Handler.default_device = args.device
    server = ThreadingHTTPServer((args.host, args.port), Handler)
    print(f"serving {args.checkpoint} on http://{args.host}:{args.port}", flush=True)
    server.serve_forever()


if __name__ == "__main__":
    main()
