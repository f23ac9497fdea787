"""Privacy-preserving supply-chain traceability on a simulated public ledger."""
