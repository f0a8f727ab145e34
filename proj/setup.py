# Thin CMake bridge: setuptools drives the same CMake build the repository
# uses directly, then picks the _core extension out of the staged package
# tree. Metadata lives in pyproject.toml.

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp) / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                f"-DPython3_EXECUTABLE={sys.executable}",
                "-DCMAKE_BUILD_TYPE=Release",
                "-DDISTCMA_BUILD_PYTHON=ON",
                "-DDISTCMA_BUILD_TESTS=OFF",
                "-DDISTCMA_BUILD_CLI=OFF",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core"],
            check=True,
        )

        staged = list((build_dir / "python" / "distcma").glob("_core.*"))
        if not staged:
            raise RuntimeError("CMake build produced no _core extension")
        target = Path(self.get_ext_fullpath(ext.name))
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(staged[0], target)

        # The bundled lexicon ships inside the package.
        data_dir = target.parent / "data"
        data_dir.mkdir(parents=True, exist_ok=True)
        shutil.copy2(source_dir / "data" / "seed_lexicon.json",
                     data_dir / "seed_lexicon.json")


setup(
    ext_modules=[CMakeExtension("distcma._core")],
    cmdclass={"build_ext": CMakeBuild},
)
