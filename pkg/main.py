#!/usr/bin/env python3
"""
strip-codes - minimum identifying, locating and dominating codes in grid strips
"""
import sys
import traceback

# Add project root to path
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli.app import EXIT_ERROR, main as cli_main


def main():
    """Main entry point for the application"""
    try:
        sys.exit(cli_main(sys.argv[1:]))
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        sys.exit(130)
    except Exception as e:
        print(f"strip-codes failed: {e}\n\n{traceback.format_exc()}", file=sys.stderr)
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
