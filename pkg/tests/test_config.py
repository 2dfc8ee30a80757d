import os

from sqglab.config import load_config


class TestConfig:
    def test_defaults(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setattr(os, "environ", {})
        cfg = load_config()
        assert cfg.out_dir == os.path.join("data", "out")
        assert cfg.threads == 1
        assert cfg.log_level == "INFO"
        assert cfg.eta == 0.05

    def test_environment_wins_over_dotenv(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setattr(os, "environ", {"SQGLAB_THREADS": "4"})
        (tmp_path / ".env").write_text(
            "# local overrides\nSQGLAB_THREADS=2\nexport SQGLAB_ETA='0.1'\nSQGLAB_OUT_DIR=\"runs\"\n",
            encoding="utf-8",
        )
        cfg = load_config()
        assert cfg.threads == 4
        assert cfg.eta == 0.1
        assert cfg.out_dir == "runs"

    def test_debug_forces_debug_level(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setattr(os, "environ", {"SQGLAB_DEBUG": "yes", "SQGLAB_LOG_LEVEL": "warning"})
        cfg = load_config()
        assert cfg.debug
        assert cfg.log_level == "DEBUG"

    def test_threads_floor(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setattr(os, "environ", {"SQGLAB_THREADS": "0"})
        assert load_config().threads == 1
