from cocite.cli import main

main()
