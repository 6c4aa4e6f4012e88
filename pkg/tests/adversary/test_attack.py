import json
import unittest

import pytest

from adversary.attack import AttackReport, AttackScenario, run_attack, run_matrix
from lockproto.passkey import ProtocolMode

PASSIVE = AttackScenario.PASSIVE_EAVESDROP
ACTIVE = AttackScenario.ACTIVE_KEY_SUBSTITUTION
TAMPER = AttackScenario.TAMPER
REPLAY = AttackScenario.REPLAY


class TestStegoCrypto(unittest.TestCase):
    def test_passive_learns_nothing(self):
        report = run_attack(PASSIVE, ProtocolMode.STEGO_CRYPTO, seed=1)
        self.assertFalse(report.passkey_recovered)
        self.assertFalse(report.unlock_granted_to_attacker)
        self.assertTrue(report.stego_detected)

    def test_thousand_tampered_images_all_detected(self):
        report = run_attack(TAMPER, ProtocolMode.STEGO_CRYPTO, seed=1, tamper_trials=1000)
        self.assertEqual(report.tampers_attempted, 1000)
        self.assertEqual(report.tampers_detected, 1000)
        self.assertFalse(report.unlock_granted_to_attacker)
        self.assertNotIn("unlock-granted", report.audit_kinds)

    def test_replay_is_stale(self):
        report = run_attack(REPLAY, ProtocolMode.STEGO_CRYPTO, seed=1)
        self.assertFalse(report.unlock_granted_to_attacker)
        self.assertEqual(report.audit_kinds, ["unlock-granted", "relock", "replay"])

    def test_key_substitution_fails_authentication(self):
        report = run_attack(ACTIVE, ProtocolMode.STEGO_CRYPTO, seed=1)
        self.assertFalse(report.passkey_recovered)
        self.assertFalse(report.unlock_granted_to_attacker)
        self.assertEqual(report.audit_kinds, ["auth-failure"])

    def test_key_leak_breaks_the_cipher_layer(self):
        report = run_attack(PASSIVE, ProtocolMode.STEGO_CRYPTO, seed=1, key_leak=True)
        self.assertTrue(report.passkey_recovered)
        self.assertTrue(report.unlock_granted_to_attacker)


class TestModeDegradation(unittest.TestCase):
    def test_plaintext_passive(self):
        report = run_attack(PASSIVE, ProtocolMode.PLAINTEXT, seed=2)
        self.assertTrue(report.passkey_recovered)
        self.assertTrue(report.unlock_granted_to_attacker)
        self.assertFalse(report.stego_detected)

    def test_stego_only_falls_to_extract(self):
        report = run_attack(PASSIVE, ProtocolMode.STEGO_ONLY, seed=2)
        self.assertTrue(report.passkey_recovered)
        self.assertTrue(report.stego_detected)

    def test_crypto_only_is_visible_but_sealed(self):
        report = run_attack(PASSIVE, ProtocolMode.CRYPTO_ONLY, seed=2)
        self.assertFalse(report.passkey_recovered)
        self.assertFalse(report.stego_detected)
        leaked = run_attack(PASSIVE, ProtocolMode.CRYPTO_ONLY, seed=2, key_leak=True)
        self.assertTrue(leaked.passkey_recovered)

    def test_replay_without_counters(self):
        self.assertTrue(run_attack(REPLAY, ProtocolMode.PLAINTEXT, seed=2).unlock_granted_to_attacker)
        self.assertTrue(run_attack(REPLAY, ProtocolMode.STEGO_ONLY, seed=2).unlock_granted_to_attacker)
        self.assertFalse(run_attack(REPLAY, ProtocolMode.CRYPTO_ONLY, seed=2).unlock_granted_to_attacker)

    def test_tamper_is_denied_in_every_mode(self):
        for mode in ProtocolMode:
            report = run_attack(TAMPER, mode, seed=3, tamper_trials=50)
            self.assertEqual(report.tampers_detected, report.tampers_attempted, mode)
            self.assertFalse(report.unlock_granted_to_attacker, mode)

    def test_relay_reads_unsealed_passkeys(self):
        for mode in (ProtocolMode.PLAINTEXT, ProtocolMode.STEGO_ONLY):
            report = run_attack(ACTIVE, mode, seed=3)
            self.assertTrue(report.passkey_recovered, mode)
            self.assertTrue(report.unlock_granted_to_attacker, mode)


def test_matrix_holds_for_stego_crypto():
    reports = run_matrix(seed=4, tamper_trials=20)
    assert len(reports) == len(AttackScenario) * len(ProtocolMode)
    for report in reports:
        if report.protocol_mode == ProtocolMode.STEGO_CRYPTO.value:
            assert not report.breached, report
            assert report.tampers_detected == report.tampers_attempted


def test_reports_are_deterministic_and_json_stable():
    first = run_attack(TAMPER, ProtocolMode.STEGO_CRYPTO, seed=9, tamper_trials=10)
    second = run_attack(TAMPER, ProtocolMode.STEGO_CRYPTO, seed=9, tamper_trials=10)
    assert first == second
    document = json.loads(first.model_dump_json())
    assert {"scenario", "protocol_mode", "passkey_recovered", "unlock_granted_to_attacker",
            "tampers_attempted", "tampers_detected", "stego_detected"} <= set(document)
    assert document["scenario"] == "tamper"


def test_report_rejects_more_detections_than_attempts():
    with pytest.raises(ValueError):
        AttackReport(scenario=TAMPER, protocol_mode=ProtocolMode.PLAINTEXT, passkey_recovered=False,
                     unlock_granted_to_attacker=False, tampers_attempted=1, tampers_detected=2,
                     stego_detected=False)
