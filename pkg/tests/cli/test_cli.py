import json
import unittest
from unittest.mock import patch
from pathlib import Path

from click.testing import CliRunner

from main import cli
from stego.image import save_png, synthetic_cover


class TestCli(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner(mix_stderr=False)

    def invoke(self, *args):
        return self.runner.invoke(cli, list(args), catch_exceptions=False)

    def test_embed_then_extract(self):
        with self.runner.isolated_filesystem():
            save_png(synthetic_cover(64, 64), "cover.png")
            Path("secret.bin").write_bytes(b"\x00\x01open sesame\xff")
            result = self.invoke("embed", "--cover", "cover.png", "--in", "secret.bin", "--out", "stego.png")
            self.assertEqual(result.exit_code, 0, result.stderr)
            result = self.invoke("extract", "--in", "stego.png", "--out", "back.bin")
            self.assertEqual(result.exit_code, 0, result.stderr)
            self.assertEqual(Path("back.bin").read_bytes(), b"\x00\x01open sesame\xff")

    def test_embed_into_a_cover_that_is_too_small(self):
        with self.runner.isolated_filesystem():
            save_png(synthetic_cover(4, 4), "tiny.png")
            Path("secret.bin").write_bytes(b"x" * 64)
            result = self.invoke("embed", "--cover", "tiny.png", "--in", "secret.bin", "--out", "stego.png")
        self.assertEqual(result.exit_code, 2)

    def test_unknown_option_is_a_usage_error(self):
        self.assertEqual(self.invoke("attack", "--scenario", "tamper", "--bogus").exit_code, 2)

    def test_tamper_attack_is_always_detected(self):
        result = self.invoke("attack", "--scenario", "tamper", "--mode", "stego-crypto", "--tampers", "50", "--json")
        self.assertEqual(result.exit_code, 0, result.stderr)
        report = json.loads(result.stdout)
        self.assertEqual(report["tampers_attempted"], 50)
        self.assertEqual(report["tampers_detected"], 50)
        self.assertFalse(report["unlock_granted_to_attacker"])

    def test_leaked_key_breaks_stego_crypto(self):
        result = self.invoke("attack", "--scenario", "passive", "--key-leak", "--json")
        self.assertEqual(result.exit_code, 1)
        self.assertTrue(json.loads(result.stdout)["passkey_recovered"])

    def test_plaintext_breach_does_not_fail_the_run(self):
        result = self.invoke("attack", "--scenario", "passive", "--mode", "plaintext", "--json")
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertTrue(json.loads(result.stdout)["passkey_recovered"])

    def test_bench_builtin_table(self):
        result = self.invoke("bench", "--json")
        self.assertEqual(result.exit_code, 0, result.stderr)
        report = json.loads(result.stdout)
        self.assertGreaterEqual(report["r_squared"], 0.95)
        self.assertEqual(len(report["table"]), 8)
        self.assertTrue(all(abs(row["relative_error"]) <= 0.30 for row in report["table"]))

    def test_bench_table_csv_and_images(self):
        with self.runner.isolated_filesystem():
            Path("table.csv").write_text("size_kb,total_s\n0,3\n8,4\n")
            save_png(synthetic_cover(40, 40), "small.png")
            result = self.invoke("bench", "--table", "table.csv", "--images", "small.png",
                                 "--images", "missing.png", "--out", "ladder.csv", "--json")
            self.assertEqual(result.exit_code, 0, result.stderr)
            report = json.loads(result.stdout)
            self.assertAlmostEqual(report["bandwidth_kbps"], 8.0)
            self.assertAlmostEqual(report["latency_s"], 3.0)
            self.assertEqual(report["rows"], 1)
            self.assertEqual(report["skipped"], ["missing.png"])
            self.assertIn("skipped:missing.png", Path("ladder.csv").read_text())

    def test_bench_rejects_a_flat_table(self):
        with self.runner.isolated_filesystem():
            Path("table.csv").write_text("10,5\n10,6\n")
            self.assertEqual(self.invoke("bench", "--table", "table.csv").exit_code, 2)

    def test_enroll_and_unlock_in_process(self):
        with self.runner.isolated_filesystem():
            result = self.invoke("enroll", "--passkey", "front-door-1", "--seed", "3", "--out", "lock.json")
            self.assertEqual(result.exit_code, 0, result.stderr)
            result = self.invoke("unlock", "--enrollment", "lock.json", "--passkey", "front-door-1",
                                 "--audit", "audit.jsonl", "--json")
            self.assertEqual(result.exit_code, 0, result.stderr)
            outcome = json.loads(result.stdout)
            self.assertTrue(outcome["granted"])
            self.assertGreater(outcome["simulated_s"], 0)
            kinds = [json.loads(line)["kind"] for line in Path("audit.jsonl").read_text().splitlines()]
            self.assertIn("unlock-granted", kinds)

            result = self.invoke("unlock", "--enrollment", "lock.json", "--passkey", "back-door-2", "--json")
            self.assertEqual(result.exit_code, 1)
            self.assertFalse(json.loads(result.stdout)["granted"])

    def test_enroll_rejects_an_empty_passkey(self):
        with self.runner.isolated_filesystem():
            self.assertEqual(self.invoke("enroll", "--passkey", "", "--out", "lock.json").exit_code, 2)

    def test_just_works_pairing_is_transparent_to_an_observer(self):
        result = self.invoke("pair", "--json")
        self.assertEqual(result.exit_code, 0, result.stderr)
        outcome = json.loads(result.stdout)
        self.assertEqual(outcome["method"], "just-works")
        self.assertTrue(outcome["keys_agree"])
        self.assertTrue(outcome["observer_recovered_stk"])

    def test_oob_pairing_hides_the_stk(self):
        result = self.invoke("pair", "--oob-hex", "00112233445566778899aabbccddeeff", "--json")
        self.assertEqual(result.exit_code, 0, result.stderr)
        self.assertFalse(json.loads(result.stdout)["observer_recovered_stk"])

    def test_lockd_without_an_enrollment(self):
        with self.runner.isolated_filesystem():
            result = self.runner.invoke(cli, ["lockd", "--listen", "127.0.0.1:0"],
                                        env={"STEGOLOCK_ENROLLMENT_PATH": None})
        self.assertEqual(result.exit_code, 2)
        self.assertIn("no enrollment file configured", result.stderr)

    @patch("main.LockControllerEndpoint")
    @patch("main.LoopbackServer")
    def test_lockd_reads_paths_from_the_environment(self, server_cls, controller_cls):
        server_cls.return_value.address = ("127.0.0.1", 7431)
        with self.runner.isolated_filesystem():
            self.invoke("enroll", "--passkey", "front-door-1", "--seed", "3", "--mode", "crypto-only",
                        "--out", "env-lock.json")
            result = self.runner.invoke(cli, ["lockd", "--listen", "127.0.0.1:0"],
                                        env={"STEGOLOCK_ENROLLMENT_PATH": "env-lock.json",
                                             "STEGOLOCK_AUDIT_PATH": "env-audit.jsonl"})
        self.assertEqual(result.exit_code, 0, result.stderr)
        settings, record = controller_cls.call_args.args[:2]
        self.assertEqual(settings["audit_path"], "env-audit.jsonl")
        self.assertEqual(settings["mode"], "crypto-only")
        self.assertEqual(record.mode.value, "crypto-only")
        server_cls.return_value.serve_forever.assert_called_once()

    def test_connected_unlock_needs_the_shared_key(self):
        with self.runner.isolated_filesystem():
            result = self.invoke("unlock", "--enrollment", "absent.json", "--passkey", "front-door-1",
                                 "--connect", "127.0.0.1:9")
        self.assertEqual(result.exit_code, 2)
        self.assertIn("absent.json", result.stderr)

    def test_embed_into_a_cover_smaller_than_the_header(self):
        with self.runner.isolated_filesystem():
            save_png(synthetic_cover(1, 1), "pixel.png")
            Path("empty.bin").write_bytes(b"")
            result = self.invoke("embed", "--cover", "pixel.png", "--in", "empty.bin", "--out", "stego.png")
        self.assertEqual(result.exit_code, 2)
