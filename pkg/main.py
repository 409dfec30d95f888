#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
RASC Backhaul Planner
Plans robotic aerial small cell relays for mmWave backhaul on a Manhattan grid
and compares them against a fixed small cell deployment
"""

import sys

from PyQt5.QtCore import QCoreApplication

from src.cli import cli


def setup_application():
    """Setup application properties for the sweep event loop"""
    app = QCoreApplication.instance() or QCoreApplication(sys.argv[:1])

    # Set application properties
    app.setApplicationName("RASC 回程规划器")
    app.setApplicationVersion("1.0.0")
    app.setOrganizationName("RASC 规划")

    return app


def main():
    """Main application entry point"""
    setup_application()
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
