"""Thin command-line client for the pkgguard service.

Every subcommand goes through the HTTP interface. With ``--server`` it talks
to a running instance; otherwise it mounts the service in-process, so the
commands also work standalone.
"""

from __future__ import annotations

import json
import sys

import click
import httpx


def _request(server: str | None, method: str, path: str, payload: dict | None):
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.request(method, path, json=payload)

    import asyncio

    from .service.app import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://pkgguard.local", timeout=600.0
        ) as client:
            return await client.request(method, path, json=payload)

    return asyncio.run(go())


def _call(ctx, method: str, path: str, payload: dict | None = None) -> dict:
    response = _request(ctx.obj.get("server"), method, path, payload)
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(1)
    return response.json()


def _emit(data) -> None:
    click.echo(json.dumps(data, indent=2))


@click.group()
@click.option("--server", default=None, help="Base URL of a running pkgguard service.")
@click.pass_context
def main(ctx, server):
    """Guard LLM decoding against hallucinated package names."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8756, type=int)
def serve(host, port):
    """Run the pkgguard HTTP service."""
    import uvicorn

    uvicorn.run("pkgguard.service.app:app", host=host, port=port)


@main.group("list")
def list_group():
    """Allowlist snapshots."""


@list_group.command("build")
@click.argument("input_path")
@click.option("--normalize/--no-normalize", default=True)
@click.option("--strict", is_flag=True, default=False)
@click.option("--out", "output_path", default=None)
@click.pass_context
def list_build(ctx, input_path, normalize, strict, output_path):
    """Normalize, deduplicate, and snapshot a package list."""
    _emit(
        _call(
            ctx,
            "POST",
            "/lists/build",
            {
                "input_path": input_path,
                "output_path": output_path,
                "normalize": normalize,
                "strict": strict,
            },
        )
    )


@main.group()
def vocab():
    """Tokenizer vocabulary exports."""


@vocab.command("import")
@click.argument("path")
@click.pass_context
def vocab_import(ctx, path):
    """Validate a vocabulary export and report its digest."""
    _emit(_call(ctx, "POST", "/vocab/import", {"path": path}))


@main.group()
def cache():
    """DFA checkpoints."""


@cache.command("build")
@click.argument("list_path")
@click.option("--out", "output_path", required=True)
@click.option("--normalize/--no-normalize", default=True)
@click.pass_context
def cache_build(ctx, list_path, output_path, normalize):
    """Compile a list into a DFA checkpoint."""
    _emit(
        _call(
            ctx,
            "POST",
            "/cache/build",
            {"list_path": list_path, "output_path": output_path, "normalize": normalize},
        )
    )


@cache.command("verify")
@click.argument("checkpoint_path")
@click.option("--list", "list_path", required=True)
@click.option("--normalize/--no-normalize", default=True)
@click.pass_context
def cache_verify(ctx, checkpoint_path, list_path, normalize):
    """Check a checkpoint's integrity and snapshot digest."""
    result = _call(
        ctx,
        "POST",
        "/cache/verify",
        {
            "checkpoint_path": checkpoint_path,
            "list_path": list_path,
            "normalize": normalize,
        },
    )
    _emit(result)
    if not result["ok"]:
        sys.exit(1)


@main.command()
@click.argument("transcript_path")
@click.option("--list", "list_path", required=True)
@click.option("--profile", default="pypi")
@click.option("--bare-commands", is_flag=True, default=False)
@click.pass_context
def score(ctx, transcript_path, list_path, profile, bare_commands):
    """Score a JSON-lines transcript: PHR, RHR, unique hallucinations."""
    _emit(
        _call(
            ctx,
            "POST",
            "/score",
            {
                "transcript_path": transcript_path,
                "list_path": list_path,
                "profile": profile,
                "bare_commands": bare_commands,
            },
        )
    )


@main.command()
@click.option("--list-sizes", default="10,1000,100000")
@click.option("--vocab-sizes", default="64,1000")
@click.option("--episodes", default=1000, type=int)
@click.option("--seed", default=0, type=int)
@click.pass_context
def fuzz(ctx, list_sizes, vocab_sizes, episodes, seed):
    """Fuzz the guard with seeded random decoding episodes."""
    _emit(
        _call(
            ctx,
            "POST",
            "/fuzz",
            {
                "episodes": episodes,
                "seed": seed,
                "list_sizes": [int(x) for x in list_sizes.split(",")],
                "vocab_sizes": [int(x) for x in vocab_sizes.split(",")],
            },
        )
    )


@main.command()
@click.option("--sizes", default="7000,70000,700000")
@click.option("--cache-dir", default=None)
@click.option("--vocab-size", default=1000, type=int)
@click.pass_context
def bench(ctx, sizes, cache_dir, vocab_size):
    """Measure DFA construction vs loading vs per-step mask latency."""
    _emit(
        _call(
            ctx,
            "POST",
            "/bench",
            {
                "sizes": [int(x) for x in sizes.split(",")],
                "cache_dir": cache_dir,
                "vocab_size": vocab_size,
            },
        )
    )


if __name__ == "__main__":
    main()
