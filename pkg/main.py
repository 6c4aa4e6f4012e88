import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError

from adversary.attack import AttackScenario, run_attack
from adversary.pairing_attack import recover_stk
from bench.calibration import TABLE1, calibrate, load_table_csv, modeled_table
from bench.ladder import default_ladder, run_ladder, write_csv, write_plot_data
from cipher.errors import AuthenticationError, InvalidInputError
from endpoints.controller_endpoint import LockControllerEndpoint
from lockproto.audit import AuditLog
from lockproto.client import KeyholderClient
from lockproto.enrollment import NotEnrolledError, enroll, load_enrollment, require_enrollment, save_enrollment
from lockproto.passkey import InvalidPasskeyError, Passkey, ProtocolMode
from lockproto.session import LockDeployment
from lockproto.settings import LockSettings
from pairing.methods import IoCapability, select_method
from pairing.smp import PairingConfig, PairingFailedError, PairingTranscript, pair_devices
from stego.errors import CapacityError, InvalidImageError, MalformedStegoError
from stego.image import load_png, save_png, synthetic_cover
from stego.lsb import embed as lsb_embed, extract as lsb_extract
from transport.channel import DisconnectError, SimulatedChannel
from transport.loopback import LoopbackServer, exchange, parse_address
from transport.model import load_channel_config

logger = logging.getLogger("stegolock")

MODES = click.Choice([m.value for m in ProtocolMode])
IO_CAPABILITIES = click.Choice([c.name.lower().replace("_", "-") for c in IoCapability])


class InputError(click.ClickException):
    """Bad input detected by a library call; reported like a usage error."""

    exit_code = 2


def _io_capability(value: str) -> IoCapability:
    return IoCapability[value.upper().replace("-", "_")]


def _emit(data: dict, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(data, indent=2, sort_keys=True))
    else:
        for key, value in data.items():
            click.echo(f"{key}: {value}")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level on standard error.")
def cli(verbose: bool):
    """Stego-crypto smart-lock protocol: keys, carriers, lock, attacks and bench."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@cli.command("enroll")
@click.option("--passkey", required=True)
@click.option("--seed", type=int, default=None, help="Reproducible key for simulation.")
@click.option("--out", "out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--mode", type=MODES, default=ProtocolMode.STEGO_CRYPTO.value, show_default=True)
@click.option("--relock-after", type=click.FloatRange(min=0, min_open=True), default=5.0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def enroll_command(passkey: str, seed: Optional[int], out: Path, mode: str, relock_after: float, as_json: bool):
    """Generate the pre-shared key and store the passkey digest."""
    try:
        record = enroll(passkey, seed=seed, mode=ProtocolMode(mode), relock_after=relock_after)
    except InvalidPasskeyError as e:
        raise InputError(str(e))
    save_enrollment(record, out)
    _emit({"enrollment": str(out), "mode": record.mode.value, "relock_after": record.relock_after}, as_json)


@cli.command("embed")
@click.option("--cover", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--in", "source", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", "out", type=click.Path(dir_okay=False, path_type=Path), required=True)
def embed_command(cover: Path, source: Path, out: Path):
    """Hide a file in the LSB plane of a PNG cover."""
    try:
        stego = lsb_embed(load_png(cover), source.read_bytes())
    except (InvalidImageError, CapacityError) as e:
        raise InputError(str(e))
    size = save_png(stego, out)
    logger.info("Wrote %d bytes to %s", size, out)


@cli.command("extract")
@click.option("--in", "source", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", "out", type=click.Path(dir_okay=False, path_type=Path), default=None)
def extract_command(source: Path, out: Optional[Path]):
    """Read a hidden payload back out of a PNG carrier."""
    try:
        payload = lsb_extract(load_png(source))
    except (InvalidImageError, MalformedStegoError) as e:
        raise InputError(str(e))
    if out is None:
        click.get_binary_stream("stdout").write(payload)
    else:
        out.write_bytes(payload)


@cli.command("lockd")
@click.option("--enrollment", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Defaults to STEGOLOCK_ENROLLMENT_PATH.")
@click.option("--audit", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Defaults to STEGOLOCK_AUDIT_PATH.")
@click.option("--listen", default="127.0.0.1:7431", show_default=True, help="HOST:PORT")
def lockd_command(enrollment: Optional[Path], audit: Optional[Path], listen: str):
    """Serve the lock controller over loopback TCP, one session at a time."""
    try:
        settings = LockSettings()
        address = parse_address(listen)
        record = require_enrollment(enrollment or settings.enrollment_path)
    except ValidationError as e:
        raise InputError(f"invalid STEGOLOCK_* settings: {e}")
    except (ValueError, NotEnrolledError) as e:
        raise InputError(str(e))
    audit_path = audit or settings.audit_path
    settings = settings.model_copy(update={"mode": record.mode, "relock_after": record.relock_after,
                                           "audit_path": str(audit_path) if audit_path else None})
    logger.info("Serving %s with audit log %s", settings.mode.value, settings.audit_path)
    controller = LockControllerEndpoint(settings.model_dump(), record, AuditLog(settings.audit_path), time.time)

    def handler(frame, source):
        controller.relock_tick(time.time())
        return controller.result_frame(controller.handle(frame, source))

    server = LoopbackServer(address, handler)
    server.start()
    click.echo(f"listening on {server.address[0]}:{server.address[1]}", err=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()


@cli.command("unlock")
@click.option("--enrollment", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--passkey", required=True)
@click.option("--cover", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--mode", type=MODES, default=None, help="Defaults to the enrolled mode.")
@click.option("--counter", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--audit", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--channel-config", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--connect", default=None, help="HOST:PORT of a running lockd.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def unlock_command(ctx, enrollment: Path, passkey: str, cover: Optional[Path], mode: Optional[str], counter: int,
                   audit: Optional[Path], channel_config: Optional[Path], connect: Optional[str], as_json: bool):
    """Send one unlock request, in-process or to a running lockd."""
    try:
        record = load_enrollment(enrollment)
        secret = Passkey(passkey)
        image = load_png(cover) if cover else synthetic_cover(64, 64)
        model = load_channel_config(channel_config) if channel_config else None
        address = parse_address(connect) if connect else None
    except (ValueError, InvalidImageError) as e:
        raise InputError(str(e))
    protocol_mode = ProtocolMode(mode) if mode else (record.mode if record else ProtocolMode.STEGO_CRYPTO)

    try:
        if address is not None:
            if protocol_mode.uses_cipher:
                record = require_enrollment(enrollment)
            client = KeyholderClient(mode=protocol_mode, key=record.key if record else None, counter=counter - 1)
            reply = exchange(address, client.unlock(secret, image))
            granted, kind = client.accept_result(reply)
            result = {"granted": granted, "kind": kind.value, "counter": client.counter}
        else:
            settings = LockSettings(mode=protocol_mode, audit_path=str(audit) if audit else None, _env_file=None)
            deployment = LockDeployment.build(mode=protocol_mode, passkey=secret, cover=image, model=model,
                                              settings=settings, enrollment=record, enrolled=record is not None)
            deployment.client.counter = counter - 1
            decision = deployment.unlock()
            result = {"granted": decision.granted, "kind": decision.kind.value, "counter": decision.counter,
                      "simulated_s": round(deployment.channel.clock.now(), 6)}
    except (CapacityError, InvalidInputError, NotEnrolledError) as e:
        raise InputError(str(e))
    except AuthenticationError as e:
        raise click.ClickException(str(e))
    except (DisconnectError, OSError) as e:
        raise click.ClickException(f"lock unreachable: {e}")

    _emit(result, as_json)
    if not result["granted"]:
        ctx.exit(1)


@cli.command("pair")
@click.option("--initiator-io", type=IO_CAPABILITIES, default="no-input-no-output", show_default=True)
@click.option("--responder-io", type=IO_CAPABILITIES, default="no-input-no-output", show_default=True)
@click.option("--passkey", type=click.IntRange(0, 999999), default=None)
@click.option("--oob-hex", default=None, help="16-byte out-of-band value as hex.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def pair_command(ctx, initiator_io: str, responder_io: str, passkey: Optional[int], oob_hex: Optional[str],
                 seed: int, as_json: bool):
    """Run a legacy pairing and show what a passive observer recovers."""
    try:
        oob = bytes.fromhex(oob_hex) if oob_hex else None
    except ValueError as e:
        raise InputError(f"--oob-hex: {e}")
    initiator = PairingConfig(io_capability=_io_capability(initiator_io), passkey=passkey, oob_data=oob, seed=seed)
    responder = PairingConfig(io_capability=_io_capability(responder_io), passkey=passkey, oob_data=oob,
                              seed=seed + 1)
    method = select_method(initiator.io_capability, responder.io_capability, oob is not None)
    channel = SimulatedChannel()
    try:
        central, peripheral = pair_devices(channel, initiator, responder)
    except PairingFailedError as e:
        _emit({"method": method.value, "paired": False, "reason": e.reason}, as_json)
        ctx.exit(1)
    except (InvalidInputError, ValueError) as e:
        raise InputError(str(e))

    transcript = PairingTranscript.from_frames(d.frame for d in channel.transcript)
    recovered = recover_stk(transcript)
    _emit({"method": method.value, "paired": True, "keys_agree": central == peripheral,
           "stk": central.stk.hex(), "observer_recovered_stk": recovered is not None and recovered.stk == central.stk,
           "simulated_s": round(channel.clock.now(), 6)}, as_json)


@cli.command("attack")
@click.option("--scenario", type=click.Choice([s.value for s in AttackScenario]), required=True)
@click.option("--mode", type=MODES, default=ProtocolMode.STEGO_CRYPTO.value, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tampers", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--key-leak", is_flag=True, help="Hand the attacker the application key.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def attack_command(ctx, scenario: str, mode: str, seed: int, tampers: int, key_leak: bool, as_json: bool):
    """Run one attack scenario and report the outcome."""
    report = run_attack(AttackScenario(scenario), ProtocolMode(mode), seed=seed, tamper_trials=tampers,
                        key_leak=key_leak)
    if as_json:
        click.echo(report.model_dump_json(indent=2))
    else:
        _emit(report.model_dump(exclude={"audit_kinds"}), False)
    held = not report.breached and report.tampers_detected == report.tampers_attempted
    if ProtocolMode(mode) is ProtocolMode.STEGO_CRYPTO and not held:
        logger.error("Attack %s succeeded against stego-crypto", scenario)
        ctx.exit(1)


@cli.command("bench")
@click.option("--table", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="size_kb,total_s CSV; defaults to the built-in dimension table.")
@click.option("--images", type=click.Path(dir_okay=False, path_type=Path), multiple=True)
@click.option("--ladder", is_flag=True, help="Run the generated carrier ladder.")
@click.option("--mode", type=MODES, default=ProtocolMode.STEGO_CRYPTO.value, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--plot-data", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--json", "as_json", is_flag=True)
def bench_command(table: Optional[Path], images, ladder: bool, mode: str, seed: int, out: Optional[Path],
                  plot_data: Optional[Path], as_json: bool):
    """Calibrate the channel model and run the carrier-size ladder."""
    try:
        points = load_table_csv(table) if table else [(r.size_kb, r.total_s) for r in TABLE1]
        calibration = calibrate(points)
    except (InvalidInputError, ValidationError) as e:
        raise InputError(str(e))

    report = calibration.model_dump()
    if table is None:
        report["table"] = [{"dimensions": r.dimensions, "size_kb": r.size_kb, "measured_s": r.measured_s,
                            "modeled_s": round(r.modeled_s, 3), "relative_error": round(r.relative_error, 4)}
                           for r in modeled_table(calibration)]

    if images or ladder:
        carriers = list(images) + (default_ladder(seed) if ladder else [])
        result = run_ladder(carriers, calibration, ProtocolMode(mode), seed=seed)
        text = write_csv(result, out)
        if plot_data is not None:
            write_plot_data(result, plot_data)
        if out is None and not as_json:
            click.echo(text, nl=False)
        report["rows"] = len(result.rows)
        report["skipped"] = [s.source for s in result.skipped]

    if as_json:
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    elif not (images or ladder):
        _emit(report, False)


if __name__ == "__main__":
    cli()
