"""Command-line entry points: run and validate scene logs, serve the API."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import objio, session as session_mod
from .errors import ReplayError


def _cmd_run(args) -> int:
    scene_path = Path(args.scene)
    text = scene_path.read_text(encoding="utf-8")
    try:
        sess = session_mod.replay(text, base_dir=scene_path.parent,
                                  seed_override=args.seed, eps_override=args.eps)
    except ReplayError as exc:
        print(f"error: {scene_path.name}: {exc}", file=sys.stderr)
        return 2
    if args.out:
        pos, faces, labels = sess.export_arrays()
        objio.export_obj(args.out, pos, faces, labels)
        print(f"wrote {args.out}: {len(pos)} vertices, {len(faces)} faces")
    if args.stats:
        Path(args.stats).write_text(sess.stats_json(), encoding="utf-8")
        print(f"wrote {args.stats}")
    return 0


def _cmd_validate(args) -> int:
    text = Path(args.scene).read_text(encoding="utf-8")
    problems = session_mod.validate_scene(text)
    for p in problems:
        print(p)
    if not problems:
        print("ok")
    return 0 if not problems else 1


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    addr = args.addr or os.environ.get("DASS_ADDR", "127.0.0.1:8787")
    host, _, port = addr.rpartition(":")
    uvicorn.run(create_app(static_dir=args.static), host=host or "127.0.0.1",
                port=int(port), log_level="warning")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="dass",
                                 description="sketch-based surface modeling kernel")
    sub = ap.add_subparsers(dest="cmd", required=True)

    runp = sub.add_parser("run", help="replay a scene log")
    runp.add_argument("scene")
    runp.add_argument("--out", help="write the final mesh as OBJ")
    runp.add_argument("--eps", type=float, default=None, help="override error threshold")
    runp.add_argument("--seed", type=int, default=None, help="override the scene seed")
    runp.add_argument("--stats", help="write run statistics as JSON")
    runp.set_defaults(fn=_cmd_run)

    valp = sub.add_parser("validate", help="check a scene log without running it")
    valp.add_argument("scene")
    valp.set_defaults(fn=_cmd_validate)

    srvp = sub.add_parser("serve", help="serve the HTTP session API")
    srvp.add_argument("--addr", help="bind address host:port (or env DASS_ADDR)")
    srvp.add_argument("--static", help="also serve this directory at /")
    srvp.set_defaults(fn=_cmd_serve)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
